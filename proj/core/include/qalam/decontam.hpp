#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "qalam/minhash.hpp"
#include "qalam/types.hpp"

namespace qalam::decontam {

struct IndexParams {
  std::size_t ngram = 13;  // exact-match window, in canonical tokens
  std::size_t num_hashes = 128;
  std::size_t bands = 16;
  std::size_t rows = 8;
  std::size_t shingle_width = 5;
  double fuzzy_threshold = 0.8;

  void validate() const;
};

nlohmann::json to_json(const IndexParams& p);
// Missing keys keep their defaults.
IndexParams params_from_json(const nlohmann::json& j);

struct ItemRef {
  Suite suite = Suite::ArabicMMLU;
  std::string task_id;

  bool operator==(const ItemRef&) const = default;
};

enum class Verdict { Clean, ExactHit, FuzzyHit, ClassifierHit };
std::string_view to_string(Verdict v);

struct Report {
  std::string doc_id;
  Verdict verdict = Verdict::Clean;
  std::optional<ItemRef> matched_item;
  std::optional<double> similarity;  // estimated Jaccard, FuzzyHit only
  std::optional<std::string> evidence;

  bool operator==(const Report&) const = default;
};

nlohmann::json to_json(const Report& r);

// Scores a (document, benchmark item) pair of canonical texts in [0, 1].
// Implementations must be deterministic and thread-safe.
class ClassifierHook {
 public:
  explicit ClassifierHook(double threshold = 0.5) : threshold_(threshold) {}
  virtual ~ClassifierHook() = default;

  virtual double score(std::string_view doc_canonical, std::string_view item_canonical) const = 0;
  virtual std::string name() const = 0;
  double threshold() const { return threshold_; }

 private:
  double threshold_;
};

// Reference hook: share of the item's distinct token bigrams (unigrams for
// one-token items) that also occur in the document.
class ContainmentHook final : public ClassifierHook {
 public:
  using ClassifierHook::ClassifierHook;
  double score(std::string_view doc_canonical, std::string_view item_canonical) const override;
  std::string name() const override { return "bigram-containment/1"; }
};

// Immutable after construction; safe to share between threads.
class ContaminationIndex {
 public:
  // Throws InvalidArgument on an empty item list or inconsistent parameters.
  static ContaminationIndex build(std::span<const BenchmarkItem> items, const IndexParams& params, std::uint64_t seed);

  // Throws VersionMismatch when the index was built under a different
  // normalization version than the running library.
  Report check(const Document& doc, const ClassifierHook* hook = nullptr) const;

  nlohmann::json to_json() const;
  static ContaminationIndex from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ContaminationIndex load(const std::filesystem::path& path);

  const IndexParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& normalization_version() const { return normalization_version_; }
  std::size_t item_count() const { return items_.size(); }
  std::size_t ngram_count() const { return ngrams_.size(); }
  const ItemRef& item(std::size_t i) const { return items_[i]; }
  const std::string& item_canonical(std::size_t i) const { return item_text_[i]; }
  const Signature& signature(std::size_t i) const { return signatures_[i]; }

  // Canonical text an item is indexed under: question followed by every option.
  static std::string indexed_text(const BenchmarkItem& item);

 private:
  ContaminationIndex(IndexParams params, std::uint64_t seed);
  void add_item(ItemRef ref, std::string canonical, std::string_view question_canonical);
  void rebuild_lsh();

  IndexParams params_;
  std::uint64_t seed_;
  std::string normalization_version_;
  MinHasher hasher_;
  std::vector<ItemRef> items_;
  std::vector<std::string> item_text_;
  std::vector<Signature> signatures_;
  std::unordered_map<std::uint64_t, std::uint32_t> ngrams_;       // n-gram hash -> first item
  std::unordered_map<std::uint64_t, std::uint32_t> exact_texts_;  // whole question / item text -> first item
  LshIndex lsh_;
};

inline ContaminationIndex build_index(std::span<const BenchmarkItem> items, const IndexParams& params,
                                      std::uint64_t seed) {
  return ContaminationIndex::build(items, params, seed);
}

inline Report check(const Document& doc, const ContaminationIndex& index, const ClassifierHook* hook = nullptr) {
  return index.check(doc, hook);
}

struct FilterResult {
  std::vector<Document> retained;  // input order preserved
  std::vector<Report> reports;     // one per removed document, input order
};

FilterResult filter_corpus(std::span<const Document> docs, const ContaminationIndex& index,
                           const ClassifierHook* hook = nullptr, unsigned jobs = 1);

}  // namespace qalam::decontam
