#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <boost/property_tree/ptree.hpp>

namespace longtail {

using IniTree = boost::property_tree::ptree;

// Parses an INI file; failures become usage errors naming the file.
IniTree load_ini(const std::filesystem::path& path);

std::optional<std::string> ini_get(const IniTree& tree, const std::string& dotted_key);

}  // namespace longtail
