#pragma once

// Brute-force reference implementations used to check the fast paths.

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace qalam::oracle {

// Byte offsets of code-point starts in well-formed UTF-8, plus the end offset.
inline std::vector<std::size_t> code_point_starts(std::string_view s) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) starts.push_back(i);
  }
  starts.push_back(s.size());
  return starts;
}

// Distinct character shingles as substrings; a text shorter than the width is
// a single shingle, the empty text has none.
inline std::set<std::string> shingles(std::string_view canonical, std::size_t width) {
  std::set<std::string> out;
  const auto starts = code_point_starts(canonical);
  const std::size_t n = starts.size() - 1;
  if (n == 0) return out;
  if (n < width) {
    out.emplace(canonical);
    return out;
  }
  for (std::size_t i = 0; i + width <= n; ++i) out.emplace(canonical.substr(starts[i], starts[i + width] - starts[i]));
  return out;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

inline std::vector<std::string> tokens(std::string_view canonical) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < canonical.size()) {
    std::size_t end = canonical.find(' ', start);
    if (end == std::string_view::npos) end = canonical.size();
    if (end > start) out.emplace_back(canonical.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

inline std::set<std::string> ngrams(std::string_view canonical, std::size_t n) {
  std::set<std::string> out;
  const auto t = tokens(canonical);
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    std::string g;
    for (std::size_t k = 0; k < n; ++k) g += (k ? " " : "") + t[i + k];
    out.insert(g);
  }
  return out;
}

}  // namespace qalam::oracle
