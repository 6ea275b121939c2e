#include "qalam/normalize.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>

#include "qalam/error.hpp"
#include "qalam/hash.hpp"
#include "utf8.hpp"

namespace qalam {

namespace {

const icu::Normalizer2& nfkc_casefold() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFKCCasefoldInstance(status);
    if (U_FAILURE(status)) throw Error("icu_failure", u_errorName(status));
    return n;
  }();
  return *instance;
}

bool is_dropped_mark(UChar32 c) { return (c >= 0x064B && c <= 0x0652) || c == 0x0640; }

UChar32 fold_letter(UChar32 c) {
  switch (c) {
    case 0x0622:
    case 0x0623:
    case 0x0625:
      return 0x0627;
    case 0x0649:
      return 0x064A;
    default:
      return c;
  }
}

bool is_separator(UChar32 c) {
  return u_isUWhiteSpace(c) || u_ispunct(c) || u_charType(c) == U_CONTROL_CHAR;
}

icu::UnicodeString single_pass(const icu::UnicodeString& in) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString folded = nfkc_casefold().normalize(in, status);
  if (U_FAILURE(status)) throw Error("icu_failure", u_errorName(status));

  icu::UnicodeString out;
  bool pending_space = false;
  for (int32_t i = 0; i < folded.length();) {
    const UChar32 c = folded.char32At(i);
    i += U16_LENGTH(c);
    if (is_dropped_mark(c)) continue;
    if (is_separator(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.isEmpty()) out.append(static_cast<UChar>(' '));
    pending_space = false;
    out.append(fold_letter(c));
  }
  return out;
}

}  // namespace

std::string canonicalize(std::string_view text) {
  icu::UnicodeString current =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  // Removing a mark can expose a new composition; iterate to the fixed point.
  for (int round = 0; round < 8; ++round) {
    current = single_pass(current);
    UErrorCode status = U_ZERO_ERROR;
    if (nfkc_casefold().isNormalized(current, status) && U_SUCCESS(status)) break;
  }
  std::string out;
  current.toUTF8String(out);
  return out;
}

std::vector<std::uint64_t> shingle_hashes(std::string_view canonical, std::size_t width) {
  std::vector<std::uint64_t> out;
  if (canonical.empty()) return out;
  if (width == 0) throw InvalidArgument("shingle width must be positive");
  std::basic_string<std::size_t> offsets;
  const std::u32string cps = utf8::decode_with_offsets(canonical, offsets);
  if (cps.size() <= width) {
    out.push_back(hash64(canonical));
    return out;
  }
  out.reserve(cps.size() - width + 1);
  for (std::size_t i = 0; i + width <= cps.size(); ++i) {
    out.push_back(hash64(canonical.substr(offsets[i], offsets[i + width] - offsets[i])));
  }
  return out;
}

std::vector<std::uint64_t> shingle_set(std::string_view canonical, std::size_t width) {
  auto h = shingle_hashes(canonical, width);
  std::sort(h.begin(), h.end());
  h.erase(std::unique(h.begin(), h.end()), h.end());
  return h;
}

NormalizedText normalize(std::string_view text, std::size_t shingle_width) {
  NormalizedText out;
  out.canonical = canonicalize(text);
  out.shingles = shingle_hashes(out.canonical, shingle_width);
  return out;
}

std::vector<std::string_view> canonical_tokens(std::string_view canonical) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < canonical.size()) {
    while (i < canonical.size() && canonical[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < canonical.size() && canonical[i] != ' ') ++i;
    if (i > start) out.push_back(canonical.substr(start, i - start));
  }
  return out;
}

}  // namespace qalam
