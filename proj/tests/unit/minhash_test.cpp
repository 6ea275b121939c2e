#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "qalam/minhash.hpp"
#include "qalam/normalize.hpp"
#include "synth.hpp"

namespace qalam {
namespace {

TEST(MinHash, IdenticalSetsAgreeEverywhere) {
  const MinHasher h(128, 1);
  const auto s = shingle_set(canonicalize("the quick brown fox jumps over the lazy dog"));
  EXPECT_EQ(h.signature(s), h.signature(s));
  EXPECT_DOUBLE_EQ(estimate_jaccard(h.signature(s), h.signature(s)), 1.0);
}

TEST(MinHash, SeedChangesSignature) {
  const auto s = shingle_set(canonicalize("some reasonably long sentence for hashing"));
  EXPECT_NE(MinHasher(128, 1).signature(s), MinHasher(128, 2).signature(s));
}

TEST(MinHash, EmptySetIsFlagged) {
  const MinHasher h(16, 0);
  EXPECT_TRUE(is_empty_signature(h.signature({})));
  const std::uint64_t one = 5;
  EXPECT_FALSE(is_empty_signature(h.signature(std::span(&one, 1))));
}

TEST(MinHash, ExactJaccardMatchesSubstringOracle) {
  synth::Rng rng(21);
  synth::Vocab vocab;
  for (int i = 0; i < 50; ++i) {
    const std::string a = canonicalize(vocab.text(rng, Language::Arabic, 10 + rng.below(40)));
    const std::string b = canonicalize(synth::perturb(rng, vocab, a, rng.unit() * 0.5));
    EXPECT_NEAR(jaccard(shingle_set(a), shingle_set(b)), oracle::jaccard(oracle::shingles(a, 5), oracle::shingles(b, 5)),
                1e-12);
  }
}

TEST(MinHashProperty, EstimateWithinPointOneOfBruteForce) {
  synth::Rng rng(22);
  synth::Vocab vocab;
  const MinHasher h(128, 99);
  int within = 0;
  const int pairs = 300;
  for (int i = 0; i < pairs; ++i) {
    const std::string a = canonicalize(vocab.text(rng, Language::Arabic, 20 + rng.below(80)));
    const std::string b = canonicalize(synth::perturb(rng, vocab, a, rng.unit()));
    const double truth = oracle::jaccard(oracle::shingles(a, 5), oracle::shingles(b, 5));
    const double est = estimate_jaccard(h.signature(shingle_set(a)), h.signature(shingle_set(b)));
    within += std::abs(est - truth) <= 0.1;
  }
  EXPECT_GE(within, pairs * 95 / 100);
}

TEST(Lsh, FindsIdenticalAndSkipsUnrelated) {
  synth::Rng rng(23);
  synth::Vocab vocab;
  const MinHasher h(128, 5);
  LshIndex lsh(16, 8);
  const std::string a = canonicalize(vocab.text(rng, Language::Arabic, 60));
  const std::string b = canonicalize(vocab.text(rng, Language::Arabic, 60));
  lsh.insert(0, h.signature(shingle_set(a)));
  lsh.insert(1, h.signature(shingle_set(b)));
  const auto c = lsh.candidates(h.signature(shingle_set(a)));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].id, 0u);
  EXPECT_EQ(c[0].band, 0u);
}

TEST(Lsh, RejectsWrongSignatureLength) {
  LshIndex lsh(4, 4);
  EXPECT_ANY_THROW(lsh.insert(0, Signature(15, 1)));
}

}  // namespace
}  // namespace qalam
