#include "qalam/curation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "qalam/error.hpp"
#include "qalam/minhash.hpp"
#include "qalam/normalize.hpp"
#include "qalam/parallel.hpp"
#include "utf8.hpp"

namespace qalam::curation {

using nlohmann::json;

void DedupParams::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("dedup threshold must be in (0, 1]");
  if (bands * rows != num_hashes) throw InvalidArgument("bands x rows must equal num_hashes");
  if (shingle_width == 0) throw InvalidArgument("shingle_width must be positive");
}

json to_json(const DedupParams& p) {
  return {{"threshold", p.threshold}, {"seed", p.seed}, {"num_hashes", p.num_hashes},
          {"bands", p.bands},         {"rows", p.rows}, {"shingle_width", p.shingle_width}};
}

DedupParams dedup_params_from_json(const json& j) {
  DedupParams p;
  p.threshold = j.value("threshold", p.threshold);
  p.seed = j.value("seed", p.seed);
  p.num_hashes = j.value("num_hashes", p.num_hashes);
  p.bands = j.value("bands", p.bands);
  p.rows = j.value("rows", p.rows);
  p.shingle_width = j.value("shingle_width", p.shingle_width);
  return p;
}

json to_json(const DedupCluster& c) {
  return {{"representative_id", c.representative_id},
          {"member_ids", c.member_ids},
          {"pairwise_similarity_floor", c.pairwise_similarity_floor}};
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller index stays root so that roots are the earliest members.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

DedupResult dedup(std::span<const Document> docs, const DedupParams& params, unsigned jobs) {
  params.validate();
  const MinHasher hasher(params.num_hashes, params.seed);
  std::vector<Signature> sigs(docs.size());
  parallel_for(docs.size(), jobs, [&](std::size_t i) {
    sigs[i] = hasher.signature(shingle_set(canonicalize(docs[i].text), params.shingle_width));
  });

  LshIndex lsh(params.bands, params.rows);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!is_empty_signature(sigs[i])) lsh.insert(static_cast<std::uint32_t>(i), sigs[i]);
  }

  std::set<std::pair<std::uint32_t, std::uint32_t>> candidate_pairs;
  lsh.for_each_bucket([&](const std::vector<std::uint32_t>& ids) {
    for (std::size_t a = 0; a < ids.size(); ++a) {
      for (std::size_t b = a + 1; b < ids.size(); ++b) {
        candidate_pairs.emplace(std::min(ids[a], ids[b]), std::max(ids[a], ids[b]));
      }
    }
  });

  DisjointSets sets(docs.size());
  for (const auto& [a, b] : candidate_pairs) {
    if (estimate_jaccard(sigs[a], sigs[b]) >= params.threshold) sets.unite(a, b);
  }

  std::map<std::size_t, std::vector<std::size_t>> groups;  // root -> members in input order
  for (std::size_t i = 0; i < docs.size(); ++i) groups[sets.find(i)].push_back(i);

  DedupResult out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (sets.find(i) == i) out.kept.push_back(docs[i]);
  }
  for (const auto& [root, members] : groups) {
    if (members.size() < 2) continue;
    DedupCluster cluster;
    cluster.representative_id = docs[root].id;
    double floor = 1.0;
    for (std::size_t a = 0; a < members.size(); ++a) {
      cluster.member_ids.push_back(docs[members[a]].id);
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        floor = std::min(floor, estimate_jaccard(sigs[members[a]], sigs[members[b]]));
      }
    }
    cluster.pairwise_similarity_floor = floor;
    out.clusters.push_back(std::move(cluster));
  }
  return out;
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::TooShort: return "TooShort";
    case Reason::LowEntropy: return "LowEntropy";
    case Reason::BoilerplateRatio: return "BoilerplateRatio";
    case Reason::UnsafeContent: return "UnsafeContent";
    case Reason::Duplicate: return "Duplicate";
  }
  return "TooShort";
}

json to_json(const QualityVerdict& v) {
  json reasons = json::array();
  for (Reason r : v.reasons) reasons.push_back(to_string(r));
  return {{"doc_id", v.doc_id}, {"kept", v.kept}, {"reasons", std::move(reasons)}};
}

TermListHook::TermListHook(const std::vector<std::string>& terms) {
  for (const auto& t : terms) {
    std::string c = canonicalize(t);
    if (!c.empty()) terms_.push_back(std::move(c));
  }
  std::sort(terms_.begin(), terms_.end());
  terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
}

TermListHook TermListHook::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing_input", "cannot open term list '" + path.string() + "'");
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    terms.push_back(line);
  }
  return TermListHook(terms);
}

bool TermListHook::flagged(std::string_view canonical) const {
  const std::string padded = " " + std::string(canonical) + " ";
  return std::any_of(terms_.begin(), terms_.end(),
                     [&](const std::string& t) { return padded.find(" " + t + " ") != std::string::npos; });
}

json to_json(const QualityConfig& c) {
  return {{"min_tokens", c.min_tokens},
          {"max_repeated_line_ratio", c.max_repeated_line_ratio},
          {"min_entropy_bits", c.min_entropy_bits},
          {"tokenizer", (c.tokenizer ? *c.tokenizer : default_tokenizer()).name()},
          {"unsafe_hook", c.unsafe ? json(c.unsafe->name()) : json(nullptr)}};
}

QualityConfig quality_config_from_json(const json& j) {
  QualityConfig c;
  c.min_tokens = j.value("min_tokens", c.min_tokens);
  c.max_repeated_line_ratio = j.value("max_repeated_line_ratio", c.max_repeated_line_ratio);
  c.min_entropy_bits = j.value("min_entropy_bits", c.min_entropy_bits);
  return c;
}

double repeated_line_ratio(std::string_view text) {
  std::set<std::string> seen;
  std::size_t lines = 0, repeats = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line = canonicalize(text.substr(start, end - start));
    if (!line.empty()) {
      ++lines;
      if (!seen.insert(std::move(line)).second) ++repeats;
    }
    start = end + 1;
  }
  return lines ? static_cast<double>(repeats) / static_cast<double>(lines) : 0.0;
}

double char_entropy(std::string_view canonical) {
  const std::u32string cps = utf8::decode(canonical);
  if (cps.empty()) return 0.0;
  std::unordered_map<char32_t, std::size_t> counts;
  for (char32_t c : cps) ++counts[c];
  const double n = static_cast<double>(cps.size());
  double h = 0.0;
  for (const auto& [c, k] : counts) {
    const double p = static_cast<double>(k) / n;
    h -= p * std::log2(p);
  }
  return h;
}

QualityVerdict quality_filter(const Document& doc, const QualityConfig& config) {
  QualityVerdict v;
  v.doc_id = doc.id;
  const Tokenizer& tok = config.tokenizer ? *config.tokenizer : default_tokenizer();
  const std::string canonical = canonicalize(doc.text);
  if (tok.count(doc.text) < config.min_tokens) v.reasons.push_back(Reason::TooShort);
  if (char_entropy(canonical) < config.min_entropy_bits) v.reasons.push_back(Reason::LowEntropy);
  if (repeated_line_ratio(doc.text) > config.max_repeated_line_ratio) v.reasons.push_back(Reason::BoilerplateRatio);
  if (config.unsafe && config.unsafe->flagged(canonical)) v.reasons.push_back(Reason::UnsafeContent);
  v.kept = v.reasons.empty();
  return v;
}

QualityVerdict duplicate_verdict(const std::string& doc_id) { return {doc_id, false, {Reason::Duplicate}}; }

}  // namespace qalam::curation
