#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "qalam/tokenizer.hpp"
#include "qalam/types.hpp"

namespace qalam::curation {

struct DedupParams {
  double threshold = 0.8;  // estimated Jaccard at or above which two docs are duplicates
  std::uint64_t seed = 0;
  std::size_t num_hashes = 128;
  std::size_t bands = 16;
  std::size_t rows = 8;
  std::size_t shingle_width = 5;

  void validate() const;
};

nlohmann::json to_json(const DedupParams& p);
DedupParams dedup_params_from_json(const nlohmann::json& j);

struct DedupCluster {
  std::string representative_id;        // earliest member in input order
  std::vector<std::string> member_ids;  // input order, representative first
  double pairwise_similarity_floor = 1.0;  // min estimated Jaccard over member pairs

  bool operator==(const DedupCluster&) const = default;
};

nlohmann::json to_json(const DedupCluster& c);

struct DedupResult {
  std::vector<Document> kept;  // input order preserved
  std::vector<DedupCluster> clusters;  // ordered by representative position
};

// MinHash signatures + banded LSH for candidates, estimated-Jaccard
// verification, union-find over verified pairs. Output does not depend on `jobs`.
DedupResult dedup(std::span<const Document> docs, const DedupParams& params, unsigned jobs = 1);

enum class Reason { TooShort, LowEntropy, BoilerplateRatio, UnsafeContent, Duplicate };
std::string_view to_string(Reason r);

struct QualityVerdict {
  std::string doc_id;
  bool kept = true;
  std::vector<Reason> reasons;

  bool operator==(const QualityVerdict&) const = default;
};

nlohmann::json to_json(const QualityVerdict& v);

class UnsafeContentHook {
 public:
  virtual ~UnsafeContentHook() = default;
  virtual bool flagged(std::string_view canonical) const = 0;
  virtual std::string name() const = 0;
};

// Flags text containing any listed term (single words or phrases), matched
// on canonical token boundaries. Terms are canonicalized on construction.
class TermListHook final : public UnsafeContentHook {
 public:
  explicit TermListHook(const std::vector<std::string>& terms);
  // One term per line; blank lines and lines starting with '#' are ignored.
  static TermListHook from_file(const std::filesystem::path& path);

  bool flagged(std::string_view canonical) const override;
  std::string name() const override { return "term-list/1"; }
  std::size_t size() const { return terms_.size(); }

 private:
  std::vector<std::string> terms_;
};

struct QualityConfig {
  std::size_t min_tokens = 16;
  double max_repeated_line_ratio = 0.3;
  double min_entropy_bits = 2.0;  // per code point, on canonical text
  const Tokenizer* tokenizer = nullptr;
  const UnsafeContentHook* unsafe = nullptr;
};

nlohmann::json to_json(const QualityConfig& c);
QualityConfig quality_config_from_json(const nlohmann::json& j);

// Share of non-blank lines (compared in canonical form) that repeat an earlier line.
double repeated_line_ratio(std::string_view text);
// Shannon entropy in bits per code point.
double char_entropy(std::string_view canonical);

QualityVerdict quality_filter(const Document& doc, const QualityConfig& config = {});

// Verdict for a document removed as a near duplicate.
QualityVerdict duplicate_verdict(const std::string& doc_id);

}  // namespace qalam::curation
