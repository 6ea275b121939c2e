#include "qalam/tokenizer.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace qalam {

namespace {

// Calls emit(begin, end) for each token's byte range.
template <typename Emit>
void scan(std::string_view text, Emit&& emit) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto n = static_cast<std::int32_t>(text.size());
  std::int32_t i = 0;
  std::int32_t word_start = -1;
  while (i < n) {
    const std::int32_t at = i;
    UChar32 c;
    U8_NEXT(bytes, i, n, c);
    const bool space = c >= 0 && (u_isUWhiteSpace(c) || u_charType(c) == U_CONTROL_CHAR);
    const bool punct = c >= 0 && u_ispunct(c);
    if (space || punct) {
      if (word_start >= 0) emit(word_start, at);
      word_start = -1;
      if (punct) emit(at, i);
    } else if (word_start < 0) {
      word_start = at;
    }
  }
  if (word_start >= 0) emit(word_start, n);
}

}  // namespace

std::vector<std::string> WhitespacePunctTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  scan(text, [&](std::int32_t b, std::int32_t e) { out.emplace_back(text.substr(b, e - b)); });
  return out;
}

std::size_t WhitespacePunctTokenizer::count(std::string_view text) const {
  std::size_t n = 0;
  scan(text, [&](std::int32_t, std::int32_t) { ++n; });
  return n;
}

const Tokenizer& default_tokenizer() {
  static const WhitespacePunctTokenizer instance;
  return instance;
}

}  // namespace qalam
