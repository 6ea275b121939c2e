#include <algorithm>
#include <map>
#include <memory>

#include "commands.hpp"
#include "qalam/curation.hpp"
#include "qalam/decontam.hpp"
#include "qalam/error.hpp"
#include "qalam/jsonl.hpp"
#include "qalam/mixture.hpp"

namespace qalam::cli {

namespace {

OnInvalid parse_on_invalid(const std::string& s) {
  if (s == "abort") return OnInvalid::Abort;
  if (s == "skip") return OnInvalid::Skip;
  throw Error("invalid_config", "on_invalid must be 'abort' or 'skip', got '" + s + "'");
}

std::vector<json> rows_of(const std::vector<Document>& docs) {
  std::vector<json> rows;
  rows.reserve(docs.size());
  for (const auto& d : docs) rows.push_back(to_json(d));
  return rows;
}

template <class T>
std::vector<json> rows_of_any(const std::vector<T>& xs) {
  std::vector<json> rows;
  rows.reserve(xs.size());
  for (const auto& x : xs) rows.push_back(to_json(x));
  return rows;
}

std::vector<Document> load_corpus(Context& ctx, const std::string& path) {
  return read_documents(ctx.input(path));
}

// --- ingest ---

struct IngestArgs {
  std::string input;
  std::string schema = "document";
  std::string on_invalid;
};

void run_ingest(const IngestArgs& a, const GlobalOptions& g) {
  Context ctx("ingest", g);
  const json& sec = ctx.section("ingest");
  const std::string mode = a.on_invalid.empty() ? sec.value("on_invalid", std::string("abort")) : a.on_invalid;
  if (a.schema != "document" && a.schema != "benchmark") {
    throw Error("invalid_config", "schema must be 'document' or 'benchmark', got '" + a.schema + "'");
  }
  const Schema schema = a.schema == "document" ? Schema::Document : Schema::Benchmark;
  ctx.set_effective("schema", a.schema);
  ctx.set_effective("on_invalid", mode);

  IngestOptions opts;
  opts.on_invalid = parse_on_invalid(mode);
  const Ingested in = ingest(ctx.input(a.input), schema, opts);

  std::uint64_t tokens = 0;
  std::map<std::string, std::size_t> by_language;
  for (const auto& d : in.documents) {
    tokens += d.token_count;
    ++by_language[std::string(to_string(d.language))];
  }
  const std::size_t records = schema == Schema::Document ? in.documents.size() : in.items.size();
  json data = {{"schema", a.schema}, {"records", records}, {"diagnostics", in.diagnostics.size()}};
  std::vector<std::vector<std::string>> rows = {{"records", std::to_string(records)},
                                                {"diagnostics", std::to_string(in.diagnostics.size())}};
  if (schema == Schema::Document) {
    data["tokens"] = tokens;
    data["by_language"] = by_language;
    rows.push_back({"tokens", std::to_string(tokens)});
    for (const auto& [lang, n] : by_language) rows.push_back({"language " + lang, std::to_string(n)});
  }

  if (!ctx.dry_run()) {
    if (schema == Schema::Document) {
      ctx.write_jsonl("documents.jsonl", rows_of(in.documents));
    } else {
      ctx.write_jsonl("benchmark.jsonl", rows_of_any(in.items));
    }
    ctx.write_jsonl("ingest_diagnostics.jsonl", rows_of_any(in.diagnostics));
  }
  ctx.report(data, render_table({"metric", "value"}, rows));
  ctx.finish();
}

// --- decontaminate ---

struct DecontamArgs {
  std::string corpus;
  std::string benchmark;
  std::string index;
  bool save_index = false;
};

void run_decontaminate(const DecontamArgs& a, const GlobalOptions& g) {
  Context ctx("decontaminate", g);
  const json& sec = ctx.section("decontaminate");
  const decontam::IndexParams params = decontam::params_from_json(sec);
  try {
    params.validate();
  } catch (const Error& e) {
    throw Error("invalid_config", e.what());
  }
  const std::string classifier = sec.value("classifier", std::string("none"));
  const double classifier_threshold = sec.value("classifier_threshold", 0.5);
  if (classifier != "none" && classifier != "containment") {
    throw Error("invalid_config", "classifier must be 'none' or 'containment', got '" + classifier + "'");
  }
  ctx.set_effective("index", decontam::to_json(params));
  ctx.set_effective("classifier", classifier);
  if (classifier != "none") ctx.set_effective("classifier_threshold", classifier_threshold);

  if (a.benchmark.empty() == a.index.empty()) throw Error("invalid_config", "give exactly one of --benchmark or --index");
  const std::vector<Document> docs = load_corpus(ctx, a.corpus);
  decontam::ContaminationIndex index =
      a.index.empty() ? decontam::build_index(read_benchmark(ctx.input(a.benchmark)), params, ctx.seed())
                      : decontam::ContaminationIndex::load(ctx.input(a.index));
  if (!a.index.empty() && !(decontam::to_json(index.params()) == decontam::to_json(params)) && !sec.empty()) {
    throw Error("invalid_config", "loaded index parameters differ from the config");
  }

  std::unique_ptr<decontam::ClassifierHook> hook;
  if (classifier == "containment") hook = std::make_unique<decontam::ContainmentHook>(classifier_threshold);
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }
  const auto result = decontam::filter_corpus(docs, index, hook.get(), ctx.jobs());

  std::map<std::string, std::size_t> verdicts = {{"Clean", result.retained.size()}};
  for (const auto& r : result.reports) ++verdicts[std::string(decontam::to_string(r.verdict))];
  ctx.write_jsonl("retained.jsonl", rows_of(result.retained));
  ctx.write_jsonl("contamination_reports.jsonl", rows_of_any(result.reports));
  if (a.save_index) ctx.write_json("contamination_index.json", index.to_json());

  std::vector<std::vector<std::string>> rows;
  for (const auto& [v, n] : verdicts) rows.push_back({v, std::to_string(n)});
  ctx.report({{"documents", docs.size()},
              {"retained", result.retained.size()},
              {"removed", result.reports.size()},
              {"verdicts", verdicts},
              {"benchmark_items", index.item_count()}},
             render_table({"verdict", "documents"}, rows));
  ctx.finish();
}

// --- dedup ---

struct DedupArgs {
  std::string corpus;
  std::optional<double> threshold;
};

void run_dedup(const DedupArgs& a, const GlobalOptions& g) {
  Context ctx("dedup", g);
  curation::DedupParams params = curation::dedup_params_from_json(ctx.section("dedup"));
  if (a.threshold) params.threshold = *a.threshold;
  params.seed = ctx.seed();
  if (!(params.threshold > 0.0 && params.threshold <= 1.0)) {
    throw Error("invalid_config", "dedup threshold must be in (0, 1]");
  }
  ctx.set_effective("dedup", curation::to_json(params));
  const std::vector<Document> docs = load_corpus(ctx, a.corpus);
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }
  const auto result = curation::dedup(docs, params, ctx.jobs());
  std::size_t flagged = 0;
  for (const auto& c : result.clusters) flagged += c.member_ids.size();
  ctx.write_jsonl("deduped.jsonl", rows_of(result.kept));
  ctx.write_jsonl("dedup_clusters.jsonl", rows_of_any(result.clusters));
  ctx.report({{"documents", docs.size()},
              {"kept", result.kept.size()},
              {"clusters", result.clusters.size()},
              {"clustered_documents", flagged}},
             render_table({"metric", "value"}, {{"documents", std::to_string(docs.size())},
                                                {"kept", std::to_string(result.kept.size())},
                                                {"clusters", std::to_string(result.clusters.size())},
                                                {"clustered documents", std::to_string(flagged)}}));
  ctx.finish();
}

// --- quality ---

struct QualityArgs {
  std::string corpus;
  std::string unsafe_terms;
};

void run_quality(const QualityArgs& a, const GlobalOptions& g) {
  Context ctx("quality", g);
  const json& sec = ctx.section("quality");
  curation::QualityConfig config = curation::quality_config_from_json(sec);
  const std::string terms_path = a.unsafe_terms.empty() ? sec.value("unsafe_terms", std::string()) : a.unsafe_terms;
  std::optional<curation::TermListHook> hook;
  if (!terms_path.empty()) {
    hook = curation::TermListHook::from_file(ctx.input(terms_path));
    config.unsafe = &*hook;
  }
  json eff = curation::to_json(config);
  eff["unsafe_terms"] = hook ? json(hook->size()) : json(nullptr);
  ctx.set_effective("quality", eff);
  const std::vector<Document> docs = load_corpus(ctx, a.corpus);
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }
  std::vector<Document> kept;
  std::vector<json> verdicts;
  std::map<std::string, std::size_t> reasons;
  for (const auto& d : docs) {
    const auto v = curation::quality_filter(d, config);
    for (auto r : v.reasons) ++reasons[std::string(curation::to_string(r))];
    if (v.kept) kept.push_back(d);
    verdicts.push_back(to_json(v));
  }
  ctx.write_jsonl("quality_kept.jsonl", rows_of(kept));
  ctx.write_jsonl("quality_verdicts.jsonl", verdicts);
  std::vector<std::vector<std::string>> rows = {{"documents", std::to_string(docs.size())},
                                                {"kept", std::to_string(kept.size())}};
  for (const auto& [r, n] : reasons) rows.push_back({"reason " + r, std::to_string(n)});
  ctx.report({{"documents", docs.size()}, {"kept", kept.size()}, {"reasons", reasons}},
             render_table({"metric", "value"}, rows));
  ctx.finish();
}

// --- mix ---

struct MixArgs {
  std::string pool;
  std::string spec;
};

void run_mix(const MixArgs& a, const GlobalOptions& g) {
  Context ctx("mix", g);
  mixture::MixtureSpec spec;
  try {
    spec = mixture::spec_from_json(a.spec.empty() ? ctx.section("mix") : read_json_file(ctx.input(a.spec)));
  } catch (const InvalidArgument& e) {
    throw Error("invalid_spec", e.what());
  }
  spec.seed = ctx.seed();
  if (const auto violations = mixture::validate_spec(spec); !violations.empty()) {
    std::string msg;
    for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v.message;
    throw Error("invalid_spec", msg);
  }
  ctx.set_effective("spec", mixture::to_json(spec));
  const std::vector<Document> pool = load_corpus(ctx, a.pool);
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }
  const mixture::MixtureManifest m = mixture::build_mixture(pool, spec);
  const auto audit = mixture::audit_manifest(m, pool, spec);

  std::map<std::string_view, const Document*> by_id;
  for (const auto& d : pool) by_id.emplace(d.id, &d);
  std::vector<json> selected;
  selected.reserve(m.selected_doc_ids.size());
  for (const auto& id : m.selected_doc_ids) selected.push_back(to_json(*by_id.at(id)));

  json manifest_json = to_json(m);
  manifest_json["digest"] = mixture::manifest_digest(m);
  ctx.write_json("mixture_manifest.json", manifest_json);
  ctx.write_jsonl("mixture.jsonl", selected);

  std::vector<std::vector<std::string>> rows;
  for (const auto& c : m.cells) {
    rows.push_back({std::string(to_string(c.cell.category)) + "/" + std::string(to_string(c.cell.language)),
                    std::to_string(c.target), std::to_string(c.achieved), std::to_string(c.supply),
                    c.shortfall ? "yes" : "no"});
  }
  json audit_json = json::array();
  for (const auto& v : audit) audit_json.push_back(v.message);
  char share[32];
  std::snprintf(share, sizeof share, "%.4f", m.arabic_share());
  std::string table = render_table({"cell", "target", "achieved", "supply", "shortfall"}, rows);
  table += "arabic share: " + std::string(share) + "\n";
  table += audit.empty() ? "audit: ok\n" : "audit: " + std::to_string(audit.size()) + " violation(s)\n";
  ctx.report({{"documents_selected", m.selected_doc_ids.size()},
              {"arabic_share", m.arabic_share()},
              {"tolerance", m.tolerance},
              {"audit_violations", audit_json}},
             table);
  ctx.finish({{"mixture_digest", manifest_json["digest"]}});
  if (!audit.empty()) throw Error("audit_failed", audit.front().message);
}

// --- report ---

void run_report(const GlobalOptions& g) {
  Context ctx("report", g);
  if (!fs::is_directory(ctx.out_dir())) throw Error("missing_input", "output directory not found: " + ctx.out_dir().string());
  std::vector<fs::path> manifests;
  for (const auto& e : fs::directory_iterator(ctx.out_dir())) {
    const std::string name = e.path().filename().string();
    if (name.ends_with(".manifest.json") && name != "report.manifest.json") manifests.push_back(e.path());
  }
  std::sort(manifests.begin(), manifests.end());
  json runs = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : manifests) {
    const json m = read_json_file(p);
    const std::string digest = m.value("config_digest", "");
    runs.push_back({{"manifest", p.filename().string()},
                    {"subcommand", m.value("subcommand", "")},
                    {"config_digest", digest},
                    {"tool_version", m.value("tool_version", "")},
                    {"seed", m.value("seed", 0)},
                    {"outputs", m.value("outputs", json::array())}});
    rows.push_back({m.value("subcommand", ""), digest.substr(0, 12), std::to_string(m.value("seed", 0)),
                    std::to_string(m.value("outputs", json::array()).size())});
  }
  ctx.report({{"runs", runs}}, render_table({"subcommand", "config", "seed", "outputs"}, rows));
  ctx.finish();
}

}  // namespace

void add_corpus_commands(CLI::App& app, const GlobalOptions& g, Action& action) {
  {
    auto a = std::make_shared<IngestArgs>();
    auto* cmd = app.add_subcommand("ingest", "Validate a JSONL corpus or benchmark file");
    cmd->add_option("input", a->input, "JSONL file")->required();
    cmd->add_option("--schema", a->schema, "document or benchmark")->capture_default_str();
    cmd->add_option("--on-invalid", a->on_invalid, "abort or skip (default: config, else abort)");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_ingest(*a, g); }; });
  }
  {
    auto a = std::make_shared<DecontamArgs>();
    auto* cmd = app.add_subcommand("decontaminate", "Remove documents overlapping benchmark items");
    cmd->add_option("--corpus", a->corpus, "Document JSONL")->required();
    cmd->add_option("--benchmark", a->benchmark, "Benchmark JSONL to index");
    cmd->add_option("--index", a->index, "Previously saved contamination index");
    cmd->add_flag("--save-index", a->save_index, "Also write contamination_index.json");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_decontaminate(*a, g); }; });
  }
  {
    auto a = std::make_shared<DedupArgs>();
    auto* cmd = app.add_subcommand("dedup", "Cluster and drop near-duplicate documents");
    cmd->add_option("--corpus", a->corpus, "Document JSONL")->required();
    cmd->add_option("--threshold", a->threshold, "Jaccard threshold in (0, 1]");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_dedup(*a, g); }; });
  }
  {
    auto a = std::make_shared<QualityArgs>();
    auto* cmd = app.add_subcommand("quality", "Drop short, repetitive, low-entropy or unsafe documents");
    cmd->add_option("--corpus", a->corpus, "Document JSONL")->required();
    cmd->add_option("--unsafe-terms", a->unsafe_terms, "Term list, one per line");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_quality(*a, g); }; });
  }
  {
    auto a = std::make_shared<MixArgs>();
    auto* cmd = app.add_subcommand("mix", "Select a token-budgeted mixture from a document pool");
    cmd->add_option("--pool", a->pool, "Document JSONL")->required();
    cmd->add_option("--spec", a->spec, "Mixture spec JSON (default: config section 'mix')");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_mix(*a, g); }; });
  }
  {
    auto* cmd = app.add_subcommand("report", "Summarize the manifests found in --out");
    cmd->callback([&g, &action] { action = [&g] { run_report(g); }; });
  }
}

}  // namespace qalam::cli
