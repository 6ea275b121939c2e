#include "letters.hpp"

#include <unicode/uchar.h>

namespace qalam::letters {

std::optional<int> latin_index(char32_t c) {
  if (c >= U'A' && c <= U'Z') return static_cast<int>(c - U'A');
  return std::nullopt;
}

std::optional<int> arabic_index(char32_t c) {
  switch (c) {
    case 0x0623: case 0x0627: case 0x0625: case 0x0622: return 0;
    case 0x0628: return 1;
    case 0x062C: return 2;
    case 0x062F: return 3;
    case 0x0647: return 4;
    case 0x0648: return 5;
    case 0x0632: return 6;
    case 0x062D: return 7;
    case 0x0637: return 8;
    case 0x064A: case 0x0649: return 9;
    case 0x0643: return 10;
    case 0x0644: return 11;
    case 0x0645: return 12;
    case 0x0646: return 13;
    case 0x0633: return 14;
    case 0x0639: return 15;
    case 0x0641: return 16;
    case 0x0635: return 17;
    case 0x0642: return 18;
    case 0x0631: return 19;
    case 0x0634: return 20;
    case 0x062A: return 21;
    case 0x062B: return 22;
    case 0x062E: return 23;
    case 0x0630: return 24;
    case 0x0636: return 25;
    default: return std::nullopt;
  }
}

bool is_word_char(char32_t c) {
  const auto cp = static_cast<UChar32>(c);
  if (c == 0x0640) return true;
  const int8_t type = u_charType(cp);
  return u_isalnum(cp) || type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK ||
         type == U_ENCLOSING_MARK;
}

std::optional<int> standalone_at(std::u32string_view s, std::size_t pos, bool allow_arabic, std::size_t& end) {
  if (pos >= s.size()) return std::nullopt;
  if (pos > 0 && is_word_char(s[pos - 1])) return std::nullopt;
  std::optional<int> idx = latin_index(s[pos]);
  if (!idx && allow_arabic) idx = arabic_index(s[pos]);
  if (!idx) return std::nullopt;
  std::size_t after = pos + 1;
  // Arabic letters may carry harakat or tatweel ("هـ").
  while (after < s.size() && (s[after] == 0x0640 || (s[after] >= 0x064B && s[after] <= 0x0652))) ++after;
  if (after < s.size() && is_word_char(s[after])) return std::nullopt;
  end = after;
  return idx;
}

}  // namespace qalam::letters
