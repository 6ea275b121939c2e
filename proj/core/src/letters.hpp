#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace qalam::letters {

// 'A'..'Z' -> 0..25.
std::optional<int> latin_index(char32_t c);
// Abjad-ordered Arabic option letters; bare alef counts as alef-hamza and
// alef maqsura as ya.
std::optional<int> arabic_index(char32_t c);

// Letters, digits, combining marks and tatweel.
bool is_word_char(char32_t c);

// If s[pos] starts a standalone option letter (not glued to other word
// characters), returns its index and sets `end` past the letter (and any
// trailing tatweel).
std::optional<int> standalone_at(std::u32string_view s, std::size_t pos, bool allow_arabic, std::size_t& end);

}  // namespace qalam::letters
