#include "absa/text.hpp"

#include <cctype>

namespace absa {

namespace {

// Byte length of the UTF-8 sequence starting at `text[i]`; 1 for invalid
// lead bytes so malformed input degrades instead of failing.
std::size_t sequence_length(const std::string& text, std::size_t i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if ((c & 0x80u) == 0x00u) {
        len = 1;
    } else if ((c & 0xE0u) == 0xC0u) {
        len = 2;
    } else if ((c & 0xF0u) == 0xE0u) {
        len = 3;
    } else if ((c & 0xF8u) == 0xF0u) {
        len = 4;
    }
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
        if ((static_cast<unsigned char>(text[i + k]) & 0xC0u) != 0x80u) return 1;
    }
    return len;
}

template <typename F>
void for_each_codepoint(const std::string& text, F&& f) {
    std::size_t cp_index = 0;
    for (std::size_t i = 0; i < text.size();) {
        std::size_t len = sequence_length(text, i);
        f(cp_index, i, len);
        i += len;
        ++cp_index;
    }
}

bool is_ascii_space(const std::string& cp) {
    return cp.size() == 1 && std::isspace(static_cast<unsigned char>(cp[0]));
}

bool is_word_codepoint(const std::string& cp) {
    if (cp.size() != 1) return true;  // non-ASCII counts as a letter
    unsigned char c = static_cast<unsigned char>(cp[0]);
    return std::isalnum(c) != 0;
}

}  // namespace

std::size_t utf8_length(const std::string& text) {
    std::size_t n = 0;
    for_each_codepoint(text, [&](std::size_t, std::size_t, std::size_t) { ++n; });
    return n;
}

std::string utf8_substr(const std::string& text, std::size_t from, std::size_t to) {
    std::size_t byte_from = text.size(), byte_to = text.size();
    for_each_codepoint(text, [&](std::size_t cp, std::size_t byte, std::size_t) {
        if (cp == from) byte_from = byte;
        if (cp == to) byte_to = byte;
    });
    if (from >= to || byte_from >= text.size()) return "";
    return text.substr(byte_from, byte_to - byte_from);
}

std::vector<std::string> utf8_codepoints(const std::string& text) {
    std::vector<std::string> out;
    for_each_codepoint(text, [&](std::size_t, std::size_t byte, std::size_t len) {
        out.push_back(text.substr(byte, len));
    });
    return out;
}

std::vector<Word> segment_words(const std::string& text) {
    std::vector<Word> words;
    Word current;
    bool in_word = false;

    auto flush = [&](std::size_t end_cp) {
        if (in_word) {
            current.cp_to = end_cp;
            words.push_back(current);
            in_word = false;
            current = Word{};
        }
    };

    std::size_t last_cp = 0;
    for_each_codepoint(text, [&](std::size_t cp, std::size_t byte, std::size_t len) {
        last_cp = cp + 1;
        std::string piece = text.substr(byte, len);
        if (is_ascii_space(piece)) {
            flush(cp);
            return;
        }
        if (is_word_codepoint(piece)) {
            if (!in_word) {
                in_word = true;
                current.cp_from = cp;
                current.text.clear();
            }
            current.text += piece;
        } else {
            // Punctuation: close any open word, emit the symbol alone.
            flush(cp);
            words.push_back(Word{piece, cp, cp + 1});
        }
    });
    flush(last_cp);
    return words;
}

std::string to_lower_ascii(const std::string& text) {
    std::string out = text;
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

}  // namespace absa
