#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace longtail {

// ASCII lowercase; bytes outside ASCII pass through untouched.
std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

// Answer normalization shared by exact match, recall containment and the
// answer-leak heuristic: lowercase, delete ASCII punctuation, collapse
// whitespace, drop one leading article (a/an/the) when more words follow.
std::string normalize(std::string_view text);

// Lexical tokens: lowercase runs of ASCII alphanumerics. Non-ASCII bytes are
// kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

// Space-joined word sequence of `text` contains the one of `needle` at word
// boundaries. Both inputs are expected to be normalized already.
bool contains_words(std::string_view text, std::string_view needle);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace longtail
