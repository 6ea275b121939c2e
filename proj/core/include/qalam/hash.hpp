#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qalam {

// Stable, platform-independent 64-bit hash (FNV-1a folded through the
// MurmurHash3 fmix64 finalizer). Used for n-gram and shingle identities, so
// its output must never change between releases.
std::uint64_t hash64(std::string_view bytes, std::uint64_t seed = 0) noexcept;

// MurmurHash3 fmix64.
constexpr std::uint64_t mix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

// Lowercase hex SHA-256 of the input.
std::string sha256_hex(std::string_view bytes);

}  // namespace qalam
