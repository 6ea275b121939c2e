#pragma once

#include <string>
#include <string_view>

namespace qalam::utf8 {

// Decodes UTF-8 into code points. Ill-formed sequences decode to U+FFFD.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
void append(std::string& out, char32_t cp);

// Byte offset of every code point boundary, plus s.size() at the end.
std::u32string decode_with_offsets(std::string_view s, std::basic_string<std::size_t>& offsets);

}  // namespace qalam::utf8
