#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace absa {

// Offsets throughout the data pipeline count Unicode code points of the
// decoded sentence text, matching how the source annotations index it.

std::size_t utf8_length(const std::string& text);

// Slice by code-point indices [from, to).
std::string utf8_substr(const std::string& text, std::size_t from, std::size_t to);

// Split into individual code points (invalid bytes pass through one by one).
std::vector<std::string> utf8_codepoints(const std::string& text);

// A word with its code-point span in the source text.
struct Word {
    std::string text;
    std::size_t cp_from = 0;
    std::size_t cp_to = 0;
};

// Word boundary rule used everywhere: split on whitespace, and detach
// punctuation so each ASCII non-alphanumeric symbol is its own word.
// Non-ASCII code points count as letters.
std::vector<Word> segment_words(const std::string& text);

std::string to_lower_ascii(const std::string& text);

}  // namespace absa
