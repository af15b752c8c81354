#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace longtail {

using Json = nlohmann::json;

// Calls `fn(record, line_number)` for every non-blank line. Parse failures
// raise a data error naming the file and line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

std::vector<Json> read_jsonl(const std::filesystem::path& path);

// Compact single-line dump with sorted keys (nlohmann objects are ordered maps).
std::string dump_line(const Json& j);

// Write a whole file through a temp sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Field accessors raising data errors with context.
std::string require_string(const Json& j, const char* key, const std::string& where);

}  // namespace longtail

namespace longtail {

// Current wall-clock time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace longtail
