#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qalam/tokenizer.hpp"
#include "qalam/types.hpp"

namespace qalam::mixture {

// Declarative budget for the supervision mixture. Defaults reproduce the
// published 372M-token, six-category, 80/20 Arabic-English recipe.
struct MixtureSpec {
  std::uint64_t total_budget = 372'000'000;
  std::map<Language, double> language_ratio = {{Language::Arabic, 0.80}, {Language::English, 0.20}};
  std::map<Category, std::uint64_t> category_budgets = {
      {Category::Literature, 103'200'000}, {Category::Stem, 90'000'000},    {Category::Creative, 70'000'000},
      {Category::Reviews, 60'200'000},     {Category::Legal, 40'000'000},   {Category::Social, 8'600'000}};
  std::uint64_t seed = 0;
  // Unset: the largest token_count in the pool.
  std::optional<std::uint64_t> tolerance;
};

nlohmann::json to_json(const MixtureSpec& spec);
// Missing keys keep their defaults. Throws InvalidArgument on unknown enum keys
// or negative numbers.
MixtureSpec spec_from_json(const nlohmann::json& j);
// SHA-256 of the canonical JSON form.
std::string spec_hash(const MixtureSpec& spec);

struct SpecViolation {
  std::string message;
};

// Empty result means the spec is valid.
std::vector<SpecViolation> validate_spec(const MixtureSpec& spec);

struct Cell {
  Category category;
  Language language;
  auto operator<=>(const Cell&) const = default;
};

// Per-(category, language) target: the category budget split by language ratio.
std::uint64_t cell_target(const MixtureSpec& spec, Cell cell);

struct CellAccount {
  Cell cell;
  std::uint64_t target = 0;
  std::uint64_t achieved = 0;
  std::uint64_t supply = 0;  // tokens available in the pool for this cell
  bool shortfall = false;    // achieved < target - tolerance
};

struct MixtureManifest {
  std::vector<std::string> selected_doc_ids;  // seeded-shuffle order
  std::map<Category, std::uint64_t> achieved_tokens_per_category;
  std::map<Language, std::uint64_t> achieved_tokens_per_language;
  std::vector<CellAccount> cells;
  std::uint64_t tolerance = 0;
  std::uint64_t seed = 0;
  std::string spec_hash;
  std::string tool_version;
  std::string tokenizer;
  std::string ratio_scope = "per-category";

  double arabic_share() const;
};

nlohmann::json to_json(const MixtureManifest& m);
MixtureManifest manifest_from_json(const nlohmann::json& j);
// SHA-256 over the manifest JSON (without its own digest field).
std::string manifest_digest(const MixtureManifest& m);

// Greedy fill of each (category, language) cell over one seeded shuffle of the
// pool. A cell accepts a document while it is below target and the document
// does not push it past target + tolerance. Documents in other languages are
// ignored. Throws InvalidArgument on an empty pool or an invalid spec.
MixtureManifest build_mixture(std::span<const Document> pool, const MixtureSpec& spec);

struct AuditViolation {
  enum class Kind { TotalsMismatch, BudgetMiss, UnreportedShortfall, DuplicateId, RatioOutOfRange, SpecMismatch };
  Kind kind;
  std::string message;
};

// Independently recounts every total from the pool (token counts recomputed
// with `tokenizer`) and checks them against the manifest and the spec.
// Throws Error("unknown_doc_id") for ids absent from the pool.
std::vector<AuditViolation> audit_manifest(const MixtureManifest& manifest, std::span<const Document> pool,
                                           const MixtureSpec& spec, const Tokenizer& tokenizer = default_tokenizer());

// Deterministic, platform-independent Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace qalam::mixture
