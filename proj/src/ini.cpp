#include "longtail/ini.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include "longtail/error.hpp"

namespace longtail {

IniTree load_ini(const std::filesystem::path& path) {
    IniTree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        fail(ErrorKind::usage, "cannot read config " + path.string() + ": " + e.message() + " (line " +
                                   std::to_string(e.line()) + ")");
    }
    return tree;
}

std::optional<std::string> ini_get(const IniTree& tree, const std::string& dotted_key) {
    auto v = tree.get_optional<std::string>(boost::property_tree::ptree::path_type(dotted_key, '.'));
    if (!v) return std::nullopt;
    return *v;
}

}  // namespace longtail
