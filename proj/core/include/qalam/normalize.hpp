#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qalam {

// Identifier of the normalization rule set. Any change to the rules below
// must bump this string; persisted indexes and manifests record it.
inline constexpr std::string_view kNormalizationVersion = "ar-norm/1";

inline constexpr std::size_t kDefaultShingleWidth = 5;

struct NormalizedText {
  std::string canonical;
  // 64-bit hashes of every `width`-code-point window of `canonical`, in
  // position order (a multiset; repeats are kept).
  std::vector<std::uint64_t> shingles;
};

// Canonical form, rules applied in order:
//   1. NFKC with case folding (covers Latin case-folding and presentation forms)
//   2. drop Arabic harakat, tanwin, shadda, sukun (U+064B..U+0652) and tatweel
//   3. fold alef variants (U+0622, U+0623, U+0625) to bare alef U+0627
//   4. fold alef maqsura U+0649 to ya U+064A
//   5. punctuation, control and whitespace runs become one ASCII space
//   6. trim
// Idempotent by construction: the pass is repeated until the output is
// stable under step 1.
std::string canonicalize(std::string_view text);

NormalizedText normalize(std::string_view text, std::size_t shingle_width = kDefaultShingleWidth);

// Shingle hashes of an already-canonical string. A non-empty text shorter than
// `width` yields a single shingle covering all of it.
std::vector<std::uint64_t> shingle_hashes(std::string_view canonical, std::size_t width = kDefaultShingleWidth);

// Sorted, de-duplicated shingle hashes.
std::vector<std::uint64_t> shingle_set(std::string_view canonical, std::size_t width = kDefaultShingleWidth);

// Whitespace split of canonical text.
std::vector<std::string_view> canonical_tokens(std::string_view canonical);

}  // namespace qalam
