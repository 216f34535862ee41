#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace senselm {

// Unicode helpers. All lexicon and vocabulary lookups go through
// canonical_form(): NFC normalization followed by full lowercasing.

std::string canonical_form(std::string_view text);

/// Number of Unicode code points in a UTF-8 string.
std::size_t codepoint_length(std::string_view utf8);

/// Code points of a UTF-8 string, each as its own UTF-8 substring.
std::vector<std::string> split_codepoints(std::string_view utf8);

/// Canonicalizes, splits on Unicode white space and isolates every
/// punctuation character as a single-character word.
std::vector<std::string> pre_tokenize(std::string_view text);

std::string_view trim(std::string_view text);

/// Splits on a single delimiter character; keeps empty fields.
std::vector<std::string_view> split(std::string_view text, char delimiter);

}  // namespace senselm
