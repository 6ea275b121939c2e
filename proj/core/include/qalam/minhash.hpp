#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace qalam {

using Signature = std::vector<std::uint64_t>;

// k-permutation MinHash over 64-bit shingle hashes. Each permutation is the
// universal hash (a*x + b) mod (2^61 - 1) with (a, b) drawn from mt19937_64
// seeded by `seed`, so signatures are reproducible across platforms.
class MinHasher {
 public:
  MinHasher(std::size_t num_hashes, std::uint64_t seed);

  // Signature of a shingle set (duplicates are harmless). The empty set maps
  // to all-ones, which callers should treat as "no signature".
  Signature signature(std::span<const std::uint64_t> shingles) const;

  std::size_t size() const { return a_.size(); }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::vector<std::uint64_t> a_;
  std::vector<std::uint64_t> b_;
};

// Fraction of positions where the signatures agree.
double estimate_jaccard(const Signature& x, const Signature& y);

// Exact Jaccard of two sorted, de-duplicated hash sets.
double jaccard(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y);

bool is_empty_signature(const Signature& sig);

// Banded LSH table: signature of `bands * rows` values, one bucket key per band.
class LshIndex {
 public:
  struct Candidate {
    std::uint32_t id;
    std::uint32_t band;  // first band in which the ids collided
  };

  LshIndex(std::size_t bands, std::size_t rows);

  void insert(std::uint32_t id, const Signature& sig);
  // Ids sharing at least one band bucket with `sig`, sorted by id.
  std::vector<Candidate> candidates(const Signature& sig) const;

  // Visit every bucket holding two or more ids.
  template <typename F>
  void for_each_bucket(F&& f) const {
    for (const auto& table : tables_) {
      for (const auto& [key, ids] : table) {
        if (ids.size() > 1) f(ids);
      }
    }
  }

  std::size_t bands() const { return bands_; }
  std::size_t rows() const { return rows_; }

 private:
  std::uint64_t band_key(const Signature& sig, std::size_t band) const;

  std::size_t bands_;
  std::size_t rows_;
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>> tables_;
};

}  // namespace qalam
