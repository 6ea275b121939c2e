#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "qalam/curation.hpp"
#include "qalam/decontam.hpp"
#include "qalam/minhash.hpp"
#include "qalam/normalize.hpp"
#include "synth.hpp"

using namespace qalam;

namespace {

std::vector<std::string> texts(std::size_t n, std::size_t words, std::uint64_t seed) {
  synth::Rng rng(seed);
  synth::Vocab vocab;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(vocab.text(rng, i % 5 ? Language::Arabic : Language::English, words, true));
  }
  return out;
}

std::vector<Document> corpus(std::size_t n, double dup_rate, std::uint64_t seed) {
  synth::Rng rng(seed);
  synth::Vocab vocab;
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = !docs.empty() && rng.chance(dup_rate)
                           ? synth::perturb(rng, vocab, docs[rng.below(docs.size())].text, 0.01)
                           : vocab.text(rng, Language::Arabic, 100 + rng.below(200), true);
    docs.push_back(synth::make_document("d" + std::to_string(i), text, Language::Arabic, Category::Social));
  }
  return docs;
}

void BM_Canonicalize(benchmark::State& state) {
  const auto in = texts(64, static_cast<std::size_t>(state.range(0)), 1);
  std::size_t bytes = 0;
  for (const auto& t : in) bytes += t.size();
  for (auto _ : state) {
    for (const auto& t : in) benchmark::DoNotOptimize(canonicalize(t));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes));
}
BENCHMARK(BM_Canonicalize)->Arg(50)->Arg(500);

void BM_Signature(benchmark::State& state) {
  const auto in = texts(64, static_cast<std::size_t>(state.range(0)), 2);
  std::vector<std::vector<std::uint64_t>> sets;
  for (const auto& t : in) sets.push_back(shingle_set(canonicalize(t)));
  const MinHasher hasher(128, 5);
  for (auto _ : state) {
    for (const auto& s : sets) benchmark::DoNotOptimize(hasher.signature(s));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * sets.size()));
}
BENCHMARK(BM_Signature)->Arg(50)->Arg(500);

void BM_DecontamCheck(benchmark::State& state) {
  synth::Rng rng(3);
  synth::Vocab vocab;
  std::vector<BenchmarkItem> items;
  for (int i = 0; i < state.range(0); ++i) {
    items.push_back(synth::make_item(rng, vocab, kAllSuites[i % kAllSuites.size()], "b" + std::to_string(i), 30, 4));
  }
  const auto index = decontam::build_index(items, {}, 1);
  const auto docs = corpus(256, 0.0, 4);
  for (auto _ : state) {
    for (const auto& d : docs) benchmark::DoNotOptimize(decontam::check(d, index));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * docs.size()));
}
BENCHMARK(BM_DecontamCheck)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Dedup(benchmark::State& state) {
  const auto docs = corpus(static_cast<std::size_t>(state.range(0)), 0.2, 5);
  const curation::DedupParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(curation::dedup(docs, params, static_cast<unsigned>(state.range(1))));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * docs.size()));
}
BENCHMARK(BM_Dedup)->Args({2000, 1})->Args({2000, 4})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
