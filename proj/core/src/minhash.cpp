#include "qalam/minhash.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "qalam/error.hpp"
#include "qalam/hash.hpp"

namespace qalam {

namespace {

constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

std::uint64_t mod_mersenne61(unsigned __int128 x) {
  std::uint64_t lo = static_cast<std::uint64_t>(x & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(x >> 61);
  std::uint64_t r = lo + hi;
  // hi can still exceed 2^61 for full 122-bit products; fold twice.
  r = (r & kMersenne61) + (r >> 61);
  return r >= kMersenne61 ? r - kMersenne61 : r;
}

constexpr std::uint64_t kEmpty = std::numeric_limits<std::uint64_t>::max();

}  // namespace

MinHasher::MinHasher(std::size_t num_hashes, std::uint64_t seed) : seed_(seed) {
  if (num_hashes == 0) throw InvalidArgument("MinHash needs at least one hash function");
  std::mt19937_64 rng(seed);
  a_.reserve(num_hashes);
  b_.reserve(num_hashes);
  for (std::size_t i = 0; i < num_hashes; ++i) {
    std::uint64_t a;
    do {
      a = rng() & kMersenne61;
    } while (a == 0 || a == kMersenne61);
    std::uint64_t b;
    do {
      b = rng() & kMersenne61;
    } while (b == kMersenne61);
    a_.push_back(a);
    b_.push_back(b);
  }
}

Signature MinHasher::signature(std::span<const std::uint64_t> shingles) const {
  Signature sig(a_.size(), kEmpty);
  for (std::uint64_t s : shingles) {
    const std::uint64_t x = mod_mersenne61(s);
    for (std::size_t i = 0; i < a_.size(); ++i) {
      const std::uint64_t h = mod_mersenne61(static_cast<unsigned __int128>(a_[i]) * x + b_[i]);
      if (h < sig[i]) sig[i] = h;
    }
  }
  return sig;
}

double estimate_jaccard(const Signature& x, const Signature& y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("signature length mismatch");
  std::size_t same = 0;
  for (std::size_t i = 0; i < x.size(); ++i) same += x[i] == y[i];
  return static_cast<double>(same) / static_cast<double>(x.size());
}

double jaccard(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y) {
  if (x.empty() && y.empty()) return 1.0;
  std::size_t i = 0, j = 0, inter = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] < y[j]) {
      ++i;
    } else if (y[j] < x[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(x.size() + y.size() - inter);
}

bool is_empty_signature(const Signature& sig) {
  return std::all_of(sig.begin(), sig.end(), [](std::uint64_t v) { return v == kEmpty; });
}

LshIndex::LshIndex(std::size_t bands, std::size_t rows) : bands_(bands), rows_(rows), tables_(bands) {
  if (bands == 0 || rows == 0) throw InvalidArgument("LSH needs positive bands and rows");
}

std::uint64_t LshIndex::band_key(const Signature& sig, std::size_t band) const {
  const auto* begin = reinterpret_cast<const char*>(sig.data() + band * rows_);
  return hash64(std::string_view(begin, rows_ * sizeof(std::uint64_t)), band);
}

void LshIndex::insert(std::uint32_t id, const Signature& sig) {
  if (sig.size() != bands_ * rows_) throw InvalidArgument("signature length does not equal bands * rows");
  for (std::size_t b = 0; b < bands_; ++b) tables_[b][band_key(sig, b)].push_back(id);
}

std::vector<LshIndex::Candidate> LshIndex::candidates(const Signature& sig) const {
  if (sig.size() != bands_ * rows_) throw InvalidArgument("signature length does not equal bands * rows");
  std::unordered_map<std::uint32_t, std::uint32_t> first_band;
  for (std::size_t b = 0; b < bands_; ++b) {
    auto it = tables_[b].find(band_key(sig, b));
    if (it == tables_[b].end()) continue;
    for (std::uint32_t id : it->second) first_band.try_emplace(id, static_cast<std::uint32_t>(b));
  }
  std::vector<Candidate> out;
  out.reserve(first_band.size());
  for (const auto& [id, band] : first_band) out.push_back({id, band});
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  return out;
}

}  // namespace qalam
