#include "qalam/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>

#include "qalam/error.hpp"
#include "qalam/hash.hpp"
#include "qalam/version.hpp"

namespace qalam::mixture {

using nlohmann::json;

namespace {

constexpr double kRatioEpsilon = 1e-9;
constexpr double kShareSlack = 0.02;

std::uint64_t max_token_count(std::span<const Document> pool) {
  std::uint64_t m = 0;
  for (const auto& d : pool) m = std::max(m, d.token_count);
  return m;
}

std::vector<Cell> cells_of(const MixtureSpec& spec) {
  std::vector<Cell> cells;
  for (const auto& [cat, budget] : spec.category_budgets) {
    for (const auto& [lang, ratio] : spec.language_ratio) cells.push_back({cat, lang});
  }
  return cells;
}

std::uint64_t read_count(const json& v, const std::string& what) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  if (v.is_number_float() && v.get<double>() >= 0 && std::floor(v.get<double>()) == v.get<double>()) {
    return static_cast<std::uint64_t>(v.get<double>());
  }
  throw InvalidArgument(what + " must be a non-negative integer token count");
}

}  // namespace

json to_json(const MixtureSpec& spec) {
  json ratio = json::object();
  for (const auto& [lang, r] : spec.language_ratio) ratio[std::string(to_string(lang))] = r;
  json budgets = json::object();
  for (const auto& [cat, b] : spec.category_budgets) budgets[std::string(to_string(cat))] = b;
  json j = {{"total_budget", spec.total_budget},
            {"language_ratio", std::move(ratio)},
            {"category_budgets", std::move(budgets)},
            {"seed", spec.seed}};
  j["tolerance"] = spec.tolerance ? json(*spec.tolerance) : json(nullptr);
  return j;
}

MixtureSpec spec_from_json(const json& j) {
  MixtureSpec spec;
  if (!j.is_object()) throw InvalidArgument("mixture spec must be a JSON object");
  if (j.contains("total_budget")) spec.total_budget = read_count(j["total_budget"], "total_budget");
  if (j.contains("language_ratio")) {
    spec.language_ratio.clear();
    for (const auto& [key, value] : j["language_ratio"].items()) {
      auto lang = parse_language(key);
      if (!lang) throw InvalidArgument("unknown language '" + key + "' in language_ratio");
      if (!value.is_number()) throw InvalidArgument("language_ratio values must be numbers");
      spec.language_ratio[*lang] = value.get<double>();
    }
  }
  if (j.contains("category_budgets")) {
    spec.category_budgets.clear();
    for (const auto& [key, value] : j["category_budgets"].items()) {
      auto cat = parse_category(key);
      if (!cat) throw InvalidArgument("unknown category '" + key + "' in category_budgets");
      spec.category_budgets[*cat] = read_count(value, "category budget '" + key + "'");
    }
  }
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("tolerance") && !j["tolerance"].is_null()) spec.tolerance = read_count(j["tolerance"], "tolerance");
  return spec;
}

std::string spec_hash(const MixtureSpec& spec) { return sha256_hex(to_json(spec).dump()); }

std::vector<SpecViolation> validate_spec(const MixtureSpec& spec) {
  std::vector<SpecViolation> out;
  std::uint64_t sum = 0;
  for (const auto& [cat, b] : spec.category_budgets) sum += b;
  if (sum != spec.total_budget) {
    out.push_back({"budget sum " + std::to_string(sum) + " != total_budget " + std::to_string(spec.total_budget)});
  }
  double ratio_sum = 0.0;
  for (const auto& [lang, r] : spec.language_ratio) {
    if (r < 0.0) out.push_back({"language_ratio for " + std::string(to_string(lang)) + " is negative"});
    ratio_sum += r;
  }
  if (std::abs(ratio_sum - 1.0) > kRatioEpsilon) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "ratio sum %.6g != 1.0", ratio_sum);
    out.push_back({buf});
  }
  return out;
}

std::uint64_t cell_target(const MixtureSpec& spec, Cell cell) {
  auto b = spec.category_budgets.find(cell.category);
  auto r = spec.language_ratio.find(cell.language);
  if (b == spec.category_budgets.end() || r == spec.language_ratio.end()) return 0;
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(b->second) * r->second));
}

double MixtureManifest::arabic_share() const {
  std::uint64_t total = 0;
  for (const auto& [lang, t] : achieved_tokens_per_language) total += t;
  if (total == 0) return 0.0;
  auto it = achieved_tokens_per_language.find(Language::Arabic);
  return it == achieved_tokens_per_language.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

json to_json(const MixtureManifest& m) {
  json per_cat = json::object();
  for (const auto& [cat, t] : m.achieved_tokens_per_category) per_cat[std::string(to_string(cat))] = t;
  json per_lang = json::object();
  for (const auto& [lang, t] : m.achieved_tokens_per_language) per_lang[std::string(to_string(lang))] = t;
  json cells = json::array();
  for (const auto& c : m.cells) {
    cells.push_back({{"category", to_string(c.cell.category)},
                     {"language", to_string(c.cell.language)},
                     {"target", c.target},
                     {"achieved", c.achieved},
                     {"supply", c.supply},
                     {"shortfall", c.shortfall}});
  }
  return {{"selected_doc_ids", m.selected_doc_ids},
          {"achieved_tokens_per_category", std::move(per_cat)},
          {"achieved_tokens_per_language", std::move(per_lang)},
          {"cells", std::move(cells)},
          {"tolerance", m.tolerance},
          {"seed", m.seed},
          {"spec_hash", m.spec_hash},
          {"tool_version", m.tool_version},
          {"tokenizer", m.tokenizer},
          {"ratio_scope", m.ratio_scope}};
}

MixtureManifest manifest_from_json(const json& j) {
  MixtureManifest m;
  m.selected_doc_ids = j.at("selected_doc_ids").get<std::vector<std::string>>();
  for (const auto& [key, value] : j.at("achieved_tokens_per_category").items()) {
    auto cat = parse_category(key);
    if (!cat) throw InvalidArgument("manifest names unknown category '" + key + "'");
    m.achieved_tokens_per_category[*cat] = value.get<std::uint64_t>();
  }
  for (const auto& [key, value] : j.at("achieved_tokens_per_language").items()) {
    auto lang = parse_language(key);
    if (!lang) throw InvalidArgument("manifest names unknown language '" + key + "'");
    m.achieved_tokens_per_language[*lang] = value.get<std::uint64_t>();
  }
  for (const auto& c : j.value("cells", json::array())) {
    auto cat = parse_category(c.at("category").get<std::string>());
    auto lang = parse_language(c.at("language").get<std::string>());
    if (!cat || !lang) throw InvalidArgument("manifest cell has unknown category or language");
    m.cells.push_back({{*cat, *lang},
                       c.at("target").get<std::uint64_t>(),
                       c.at("achieved").get<std::uint64_t>(),
                       c.at("supply").get<std::uint64_t>(),
                       c.at("shortfall").get<bool>()});
  }
  m.tolerance = j.at("tolerance").get<std::uint64_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.spec_hash = j.at("spec_hash").get<std::string>();
  m.tool_version = j.value("tool_version", "");
  m.tokenizer = j.value("tokenizer", "");
  m.ratio_scope = j.value("ratio_scope", "per-category");
  return m;
}

std::string manifest_digest(const MixtureManifest& m) { return sha256_hex(to_json(m).dump()); }

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  // Fisher-Yates with rejection sampling; std::shuffle and
  // std::uniform_int_distribution are not specified bit-for-bit.
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(perm[i - 1], perm[r % bound]);
  }
  return perm;
}

MixtureManifest build_mixture(std::span<const Document> pool, const MixtureSpec& spec) {
  if (pool.empty()) throw InvalidArgument("mixture pool is empty");
  if (auto v = validate_spec(spec); !v.empty()) throw InvalidArgument("invalid mixture spec: " + v.front().message);

  MixtureManifest m;
  m.tolerance = spec.tolerance.value_or(max_token_count(pool));
  m.seed = spec.seed;
  m.spec_hash = spec_hash(spec);
  m.tool_version = std::string(kToolName) + " " + kToolVersion;
  m.tokenizer = default_tokenizer().name();

  std::map<Cell, CellAccount> accounts;
  for (const Cell& c : cells_of(spec)) accounts[c] = {c, cell_target(spec, c), 0, 0, false};
  for (const auto& d : pool) {
    if (auto it = accounts.find({d.category, d.language}); it != accounts.end()) it->second.supply += d.token_count;
  }

  std::unordered_map<std::string_view, bool> taken;
  for (std::size_t idx : seeded_permutation(pool.size(), spec.seed)) {
    const Document& d = pool[idx];
    auto it = accounts.find({d.category, d.language});
    if (it == accounts.end()) continue;
    CellAccount& acc = it->second;
    if (acc.achieved >= acc.target) continue;
    if (acc.achieved + d.token_count > acc.target + m.tolerance) continue;
    if (!taken.emplace(d.id, true).second) continue;
    acc.achieved += d.token_count;
    m.selected_doc_ids.push_back(d.id);
  }

  for (const auto& [cell, acc] : accounts) {
    CellAccount a = acc;
    a.shortfall = a.achieved + m.tolerance < a.target;
    m.achieved_tokens_per_category[cell.category] += a.achieved;
    m.achieved_tokens_per_language[cell.language] += a.achieved;
    m.cells.push_back(a);
  }
  return m;
}

std::vector<AuditViolation> audit_manifest(const MixtureManifest& manifest, std::span<const Document> pool,
                                           const MixtureSpec& spec, const Tokenizer& tokenizer) {
  using Kind = AuditViolation::Kind;
  std::vector<AuditViolation> out;

  std::unordered_map<std::string_view, const Document*> by_id;
  for (const auto& d : pool) by_id.emplace(d.id, &d);

  std::set<std::string_view> seen;
  std::map<Cell, std::uint64_t> achieved;
  for (const auto& id : manifest.selected_doc_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("unknown_doc_id", "manifest lists doc id '" + id + "' which is not in the pool");
    if (!seen.insert(id).second) {
      out.push_back({Kind::DuplicateId, "doc id '" + id + "' selected more than once"});
      continue;
    }
    const Document& d = *it->second;
    achieved[{d.category, d.language}] += tokenizer.count(d.text);
  }

  if (spec_hash(spec) != manifest.spec_hash) {
    out.push_back({Kind::SpecMismatch, "manifest spec_hash does not match the supplied spec"});
  }
  std::uint64_t pool_max = 0;
  for (const auto& d : pool) pool_max = std::max<std::uint64_t>(pool_max, tokenizer.count(d.text));
  const std::uint64_t tolerance = spec.tolerance.value_or(pool_max);
  if (tolerance != manifest.tolerance) {
    out.push_back({Kind::SpecMismatch, "manifest tolerance " + std::to_string(manifest.tolerance) +
                                           " differs from the recomputed " + std::to_string(tolerance)});
  }

  std::map<Category, std::uint64_t> per_cat;
  std::map<Language, std::uint64_t> per_lang;
  for (const auto& [cell, t] : achieved) {
    per_cat[cell.category] += t;
    per_lang[cell.language] += t;
  }
  for (Category cat : kAllCategories) {
    const auto recorded_it = manifest.achieved_tokens_per_category.find(cat);
    const std::uint64_t recorded = recorded_it == manifest.achieved_tokens_per_category.end() ? 0 : recorded_it->second;
    const std::uint64_t actual = per_cat.contains(cat) ? per_cat[cat] : 0;
    if (recorded != actual) {
      std::string msg = "category " + std::string(to_string(cat)) + ": manifest records " + std::to_string(recorded) +
                        " tokens but the selected documents total " + std::to_string(actual);
      if (actual < recorded) msg += " (shortfall of " + std::to_string(recorded - actual) + ")";
      out.push_back({Kind::TotalsMismatch, msg});
    }
  }
  for (const auto& [lang, recorded] : manifest.achieved_tokens_per_language) {
    const std::uint64_t actual = per_lang.contains(lang) ? per_lang[lang] : 0;
    if (recorded != actual) {
      out.push_back({Kind::TotalsMismatch, "language " + std::string(to_string(lang)) + ": manifest records " +
                                               std::to_string(recorded) + " tokens but the selected documents total " +
                                               std::to_string(actual)});
    }
  }

  bool any_short = false;
  for (const Cell& cell : cells_of(spec)) {
    const std::uint64_t target = cell_target(spec, cell);
    const std::uint64_t got = achieved.contains(cell) ? achieved[cell] : 0;
    std::uint64_t supply = 0;
    for (const auto& d : pool) {
      if (d.category == cell.category && d.language == cell.language) supply += tokenizer.count(d.text);
    }
    const std::uint64_t diff = got > target ? got - target : target - got;
    if (diff <= tolerance) continue;
    const std::string name = std::string(to_string(cell.category)) + "/" + std::string(to_string(cell.language));
    if (got > target || supply >= target) {
      out.push_back({Kind::BudgetMiss, "cell " + name + ": achieved " + std::to_string(got) + " vs target " +
                                           std::to_string(target) + " exceeds tolerance " + std::to_string(tolerance)});
      continue;
    }
    any_short = true;
    const bool reported = std::any_of(manifest.cells.begin(), manifest.cells.end(), [&](const CellAccount& a) {
      return a.cell == cell && a.shortfall;
    });
    if (!reported) {
      out.push_back({Kind::UnreportedShortfall, "cell " + name + " is under-supplied (" + std::to_string(supply) +
                                                    " of " + std::to_string(target) + " tokens) but not reported"});
    }
  }

  if (!any_short && spec.language_ratio.contains(Language::Arabic)) {
    std::uint64_t total = 0;
    for (const auto& [lang, t] : per_lang) total += t;
    const double share =
        total ? static_cast<double>(per_lang.contains(Language::Arabic) ? per_lang[Language::Arabic] : 0) / total : 0.0;
    const double want = spec.language_ratio.at(Language::Arabic);
    if (std::abs(share - want) > kShareSlack) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "Arabic token share %.4f outside %.2f +/- %.2f", share, want, kShareSlack);
      out.push_back({Kind::RatioOutOfRange, buf});
    }
  }
  return out;
}

}  // namespace qalam::mixture
