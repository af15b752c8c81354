#include "longtail/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "longtail/error.hpp"
#include "longtail/text.hpp"

namespace longtail {

namespace fs = std::filesystem;

void for_each_jsonl(const fs::path& path, const std::function<void(const Json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::data, "cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            fail(ErrorKind::data, path.string() + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
        }
        fn(j, lineno);
    }
}

std::vector<Json> read_jsonl(const fs::path& path) {
    std::vector<Json> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) { out.push_back(j); });
    return out;
}

std::string dump_line(const Json& j) {
    return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::data, "cannot write " + tmp.string());
        out << content;
        if (!out) fail(ErrorKind::data, "write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::data, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string require_string(const Json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) fail(ErrorKind::data, where + ": missing string field \"" + key + "\"");
    return it->get<std::string>();
}

}  // namespace longtail

#include <chrono>
#include <ctime>

namespace longtail {

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace longtail
