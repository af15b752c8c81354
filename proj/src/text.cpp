#include "longtail/text.hpp"

#include <cctype>

namespace longtail {

namespace {

bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }
bool is_space(unsigned char c) { return c < 0x80 && std::isspace(c); }
bool is_token_char(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) {
        auto c = static_cast<unsigned char>(ch);
        if (c < 0x80) ch = static_cast<char>(std::tolower(c));
    }
    return out;
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string normalize(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_space(c)) {
            if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
        } else if (is_ascii_punct(c)) {
            continue;
        } else {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));

    std::size_t first = 0;
    if (words.size() > 1 && (words[0] == "a" || words[0] == "an" || words[0] == "the")) first = 1;

    std::string out;
    for (std::size_t i = first; i < words.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[i];
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_token_char(c)) {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool contains_words(std::string_view text, std::string_view needle) {
    if (needle.empty()) return false;
    std::string padded_text = " " + std::string(text) + " ";
    std::string padded_needle = " " + std::string(needle) + " ";
    return padded_text.find(padded_needle) != std::string::npos;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace longtail
