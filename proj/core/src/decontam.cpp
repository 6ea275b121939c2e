#include "qalam/decontam.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "qalam/error.hpp"
#include "qalam/hash.hpp"
#include "qalam/jsonl.hpp"
#include "qalam/normalize.hpp"
#include "qalam/parallel.hpp"

namespace qalam::decontam {

using nlohmann::json;

namespace {

constexpr std::string_view kIndexFormat = "qalam-contamination-index";
constexpr int kIndexFormatVersion = 1;

// Byte range [start of token i, end of token i+n-1] inside single-spaced canonical text.
std::string_view span_of(std::string_view canonical, const std::vector<std::string_view>& tokens, std::size_t i,
                         std::size_t n) {
  const char* begin = tokens[i].data();
  const char* end = tokens[i + n - 1].data() + tokens[i + n - 1].size();
  return canonical.substr(static_cast<std::size_t>(begin - canonical.data()), static_cast<std::size_t>(end - begin));
}

std::vector<std::uint64_t> bigram_set(std::string_view canonical) {
  const auto tokens = canonical_tokens(canonical);
  std::vector<std::uint64_t> out;
  if (tokens.size() == 1) {
    out.push_back(hash64(tokens[0]));
  } else {
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) out.push_back(hash64(span_of(canonical, tokens, i, 2)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

void IndexParams::validate() const {
  if (ngram < 2) throw InvalidArgument("n-gram size must be at least 2");
  if (num_hashes == 0) throw InvalidArgument("num_hashes must be positive");
  if (bands * rows != num_hashes) {
    throw InvalidArgument("bands x rows (" + std::to_string(bands) + " x " + std::to_string(rows) +
                          ") must equal num_hashes (" + std::to_string(num_hashes) + ")");
  }
  if (shingle_width == 0) throw InvalidArgument("shingle_width must be positive");
  if (!(fuzzy_threshold > 0.0 && fuzzy_threshold <= 1.0)) throw InvalidArgument("fuzzy_threshold must be in (0, 1]");
}

json to_json(const IndexParams& p) {
  return {{"ngram", p.ngram},   {"num_hashes", p.num_hashes},       {"bands", p.bands},
          {"rows", p.rows},     {"shingle_width", p.shingle_width}, {"fuzzy_threshold", p.fuzzy_threshold}};
}

IndexParams params_from_json(const json& j) {
  IndexParams p;
  p.ngram = j.value("ngram", p.ngram);
  p.num_hashes = j.value("num_hashes", p.num_hashes);
  p.bands = j.value("bands", p.bands);
  p.rows = j.value("rows", p.rows);
  p.shingle_width = j.value("shingle_width", p.shingle_width);
  p.fuzzy_threshold = j.value("fuzzy_threshold", p.fuzzy_threshold);
  return p;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Clean: return "Clean";
    case Verdict::ExactHit: return "ExactHit";
    case Verdict::FuzzyHit: return "FuzzyHit";
    case Verdict::ClassifierHit: return "ClassifierHit";
  }
  return "Clean";
}

json to_json(const Report& r) {
  json j = {{"doc_id", r.doc_id}, {"verdict", to_string(r.verdict)}};
  j["matched_suite"] = r.matched_item ? json(qalam::to_string(r.matched_item->suite)) : json(nullptr);
  j["matched_task_id"] = r.matched_item ? json(r.matched_item->task_id) : json(nullptr);
  j["similarity"] = r.similarity ? json(*r.similarity) : json(nullptr);
  if (r.evidence) j["evidence"] = *r.evidence;
  return j;
}

double ContainmentHook::score(std::string_view doc_canonical, std::string_view item_canonical) const {
  const auto item = bigram_set(item_canonical);
  if (item.empty()) return 0.0;
  const auto doc = bigram_set(doc_canonical);
  std::size_t hits = 0;
  for (std::uint64_t h : item) hits += std::binary_search(doc.begin(), doc.end(), h);
  return static_cast<double>(hits) / static_cast<double>(item.size());
}

ContaminationIndex::ContaminationIndex(IndexParams params, std::uint64_t seed)
    : params_(params),
      seed_(seed),
      normalization_version_(kNormalizationVersion),
      hasher_(params.num_hashes, seed),
      lsh_(params.bands, params.rows) {}

std::string ContaminationIndex::indexed_text(const BenchmarkItem& item) {
  std::string text = item.question;
  for (const auto& option : item.options) {
    text += ' ';
    text += option;
  }
  return canonicalize(text);
}

void ContaminationIndex::add_item(ItemRef ref, std::string canonical, std::string_view question_canonical) {
  const auto id = static_cast<std::uint32_t>(items_.size());
  const auto tokens = canonical_tokens(canonical);
  if (tokens.size() >= params_.ngram) {
    for (std::size_t i = 0; i + params_.ngram <= tokens.size(); ++i) {
      ngrams_.try_emplace(hash64(span_of(canonical, tokens, i, params_.ngram)), id);
    }
  }
  if (!canonical.empty()) exact_texts_.try_emplace(hash64(canonical), id);
  if (!question_canonical.empty()) exact_texts_.try_emplace(hash64(question_canonical), id);

  const auto shingles = shingle_set(canonical, params_.shingle_width);
  signatures_.push_back(hasher_.signature(shingles));
  items_.push_back(std::move(ref));
  item_text_.push_back(std::move(canonical));
}

void ContaminationIndex::rebuild_lsh() {
  lsh_ = LshIndex(params_.bands, params_.rows);
  for (std::size_t i = 0; i < signatures_.size(); ++i) {
    if (!is_empty_signature(signatures_[i])) lsh_.insert(static_cast<std::uint32_t>(i), signatures_[i]);
  }
}

ContaminationIndex ContaminationIndex::build(std::span<const BenchmarkItem> items, const IndexParams& params,
                                             std::uint64_t seed) {
  params.validate();
  if (items.empty()) throw InvalidArgument("cannot build a contamination index from zero benchmark items");
  ContaminationIndex index(params, seed);
  for (const auto& item : items) {
    index.add_item({item.suite, item.task_id}, indexed_text(item), canonicalize(item.question));
  }
  index.rebuild_lsh();
  return index;
}

Report ContaminationIndex::check(const Document& doc, const ClassifierHook* hook) const {
  if (normalization_version_ != kNormalizationVersion) {
    throw VersionMismatch("index built with normalization '" + normalization_version_ + "' but documents use '" +
                          std::string(kNormalizationVersion) + "'");
  }
  Report report;
  report.doc_id = doc.id;
  const std::string canonical = canonicalize(doc.text);
  if (canonical.empty()) return report;

  if (auto it = exact_texts_.find(hash64(canonical)); it != exact_texts_.end()) {
    report.verdict = Verdict::ExactHit;
    report.matched_item = items_[it->second];
    report.evidence = "full text";
    return report;
  }

  const auto tokens = canonical_tokens(canonical);
  for (std::size_t i = 0; i + params_.ngram <= tokens.size(); ++i) {
    const auto gram = span_of(canonical, tokens, i, params_.ngram);
    if (auto it = ngrams_.find(hash64(gram)); it != ngrams_.end()) {
      report.verdict = Verdict::ExactHit;
      report.matched_item = items_[it->second];
      report.evidence = std::string(gram);
      return report;
    }
  }

  const auto shingles = shingle_set(canonical, params_.shingle_width);
  const Signature sig = hasher_.signature(shingles);
  double best = -1.0;
  const LshIndex::Candidate* best_candidate = nullptr;
  const auto candidates = lsh_.candidates(sig);
  for (const auto& c : candidates) {
    const double est = estimate_jaccard(sig, signatures_[c.id]);
    if (est > best) {
      best = est;
      best_candidate = &c;
    }
  }
  if (best_candidate && best >= params_.fuzzy_threshold) {
    report.verdict = Verdict::FuzzyHit;
    report.matched_item = items_[best_candidate->id];
    report.similarity = best;
    report.evidence = "lsh band " + std::to_string(best_candidate->band);
    return report;
  }

  if (hook) {
    double best_score = -1.0;
    std::size_t best_item = 0;
    for (std::size_t i = 0; i < item_text_.size(); ++i) {
      const double s = hook->score(canonical, item_text_[i]);
      if (s > best_score) {
        best_score = s;
        best_item = i;
      }
    }
    if (best_score >= hook->threshold()) {
      report.verdict = Verdict::ClassifierHit;
      report.matched_item = items_[best_item];
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.4f", best_score);
      report.evidence = hook->name() + " score " + buf;
    }
  }
  return report;
}

json ContaminationIndex::to_json() const {
  auto sorted_pairs = [](const std::unordered_map<std::uint64_t, std::uint32_t>& m) {
    std::vector<std::pair<std::uint64_t, std::uint32_t>> v(m.begin(), m.end());
    std::sort(v.begin(), v.end());
    json arr = json::array();
    for (const auto& [h, id] : v) arr.push_back({h, id});
    return arr;
  };
  json items = json::array();
  for (std::size_t i = 0; i < items_.size(); ++i) {
    items.push_back({{"suite", qalam::to_string(items_[i].suite)},
                     {"task_id", items_[i].task_id},
                     {"canonical", item_text_[i]},
                     {"signature", signatures_[i]}});
  }
  return {{"format", kIndexFormat},
          {"format_version", kIndexFormatVersion},
          {"normalization_version", normalization_version_},
          {"params", decontam::to_json(params_)},
          {"seed", seed_},
          {"items", std::move(items)},
          {"ngrams", sorted_pairs(ngrams_)},
          {"exact_texts", sorted_pairs(exact_texts_)}};
}

ContaminationIndex ContaminationIndex::from_json(const json& j) {
  if (j.value("format", "") != kIndexFormat) throw InvalidArgument("not a contamination index file");
  if (j.value("format_version", 0) != kIndexFormatVersion) {
    throw VersionMismatch("unsupported index format version " + std::to_string(j.value("format_version", 0)));
  }
  const IndexParams params = params_from_json(j.at("params"));
  params.validate();
  ContaminationIndex index(params, j.at("seed").get<std::uint64_t>());
  index.normalization_version_ = j.at("normalization_version").get<std::string>();
  for (const auto& item : j.at("items")) {
    auto suite = parse_suite(item.at("suite").get<std::string>());
    if (!suite) throw InvalidArgument("index names unknown suite");
    index.items_.push_back({*suite, item.at("task_id").get<std::string>()});
    index.item_text_.push_back(item.at("canonical").get<std::string>());
    index.signatures_.push_back(item.at("signature").get<Signature>());
    if (index.signatures_.back().size() != params.num_hashes) throw InvalidArgument("index signature length mismatch");
  }
  for (const auto& p : j.at("ngrams")) index.ngrams_.emplace(p.at(0).get<std::uint64_t>(), p.at(1).get<std::uint32_t>());
  for (const auto& p : j.at("exact_texts")) {
    index.exact_texts_.emplace(p.at(0).get<std::uint64_t>(), p.at(1).get<std::uint32_t>());
  }
  index.rebuild_lsh();
  return index;
}

void ContaminationIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write '" + path.string() + "'");
  out << to_json().dump() << '\n';
}

ContaminationIndex ContaminationIndex::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

FilterResult filter_corpus(std::span<const Document> docs, const ContaminationIndex& index,
                           const ClassifierHook* hook, unsigned jobs) {
  std::vector<Report> all(docs.size());
  parallel_for(docs.size(), jobs, [&](std::size_t i) { all[i] = index.check(docs[i], hook); });
  FilterResult out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (all[i].verdict == Verdict::Clean) {
      out.retained.push_back(docs[i]);
    } else {
      out.reports.push_back(std::move(all[i]));
    }
  }
  return out;
}

}  // namespace qalam::decontam
