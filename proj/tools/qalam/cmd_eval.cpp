#include <map>
#include <memory>

#include "clients.hpp"
#include "commands.hpp"
#include "qalam/error.hpp"
#include "qalam/eval.hpp"
#include "qalam/jsonl.hpp"

namespace qalam::cli {

namespace {

std::vector<Suite> suite_set(Context& ctx) {
  const json& sec = ctx.section("eval");
  std::vector<Suite> suites;
  if (sec.contains("suites")) {
    for (const auto& s : sec["suites"]) {
      const auto suite = parse_suite(s.get<std::string>());
      if (!suite) throw Error("invalid_config", "unknown suite '" + s.get<std::string>() + "'");
      suites.push_back(*suite);
    }
  } else {
    suites.assign(kAllSuites.begin(), kAllSuites.end());
  }
  json names = json::array();
  for (Suite s : suites) names.push_back(to_string(s));
  ctx.set_effective("suites", names);
  return suites;
}

// Accepts {"rows": [...]} score tables and the eval_summary.json written by `eval run`.
std::vector<eval::ScoreRow> load_rows(Context& ctx, const std::string& path) {
  const json j = read_json_file(ctx.input(path));
  if (j.contains("tasks")) {
    eval::ScoreRow row;
    row.model = j.value("model", std::string("run"));
    for (const auto& t : j["tasks"]) {
      const auto suite = parse_suite(t.at("suite").get<std::string>());
      if (!suite) throw Error("invalid_input", "unknown suite in summary");
      row.scores[*suite] = t.at("accuracy").get<double>();
    }
    return {row};
  }
  try {
    return eval::score_rows_from_json(j);
  } catch (const InvalidArgument& e) {
    throw Error("invalid_input", e.what());
  }
}

const eval::ScoreRow& find_row(const std::vector<eval::ScoreRow>& rows, const std::string& model) {
  for (const auto& r : rows) {
    if (r.model == model) return r;
  }
  throw Error("unknown_model", "no row named '" + model + "'");
}

// --- eval run ---

struct RunArgs {
  std::string items;
  std::string mode;
  std::string norm;
  std::string replay;
};

void run_eval(const RunArgs& a, const GlobalOptions& g) {
  Context ctx("eval run", g);
  const json& sec = ctx.section("eval");
  const std::string mode_name = a.mode.empty() ? sec.value("mode", std::string("ParseAfterReasoning")) : a.mode;
  const auto mode = eval::parse_scoring_mode(mode_name);
  if (!mode) throw Error("invalid_config", "unknown scoring mode '" + mode_name + "'");
  const std::string norm_name = a.norm.empty() ? sec.value("norm", std::string("ByteLength")) : a.norm;
  const auto norm = eval::parse_norm(norm_name);
  if (!norm) throw Error("invalid_config", "unknown normalizer '" + norm_name + "'");

  eval::RunOptions opts;
  opts.norm = *norm;
  if (sec.contains("extraction")) opts.extraction = eval::extraction_from_json(sec["extraction"]);
  if (sec.contains("template")) opts.tmpl.text = sec["template"].get<std::string>();
  opts.policy = policy_from_json(sec.value("retry", json::object()), ctx.jobs());
  opts.on_retry = [](const RetryEvent& e) {
    std::cerr << "retry item=" << e.item_id << " attempt=" << e.attempt << " error=" << json(e.error).dump() << "\n";
  };
  ctx.set_effective("mode", eval::to_string(*mode));
  if (*mode == eval::ScoringMode::LogLikelihoodNorm) ctx.set_effective("norm", eval::to_string(*norm));
  if (*mode == eval::ScoringMode::ParseAfterReasoning) ctx.set_effective("extraction", eval::to_json(opts.extraction));
  ctx.set_effective("template", opts.tmpl.text);
  json retry_eff = to_json(opts.policy);
  retry_eff.erase("max_in_flight");
  ctx.set_effective("retry", retry_eff);

  const auto items = read_benchmark(ctx.input(a.items));
  if (items.empty()) throw Error("empty_task", "empty task");

  std::unique_ptr<eval::ModelClient> client;
  if (!a.replay.empty()) {
    ctx.set_effective("endpoint", "replay");
    client = std::make_unique<eval::ReplayClient>(eval::ReplayClient::from_json(read_json_file(ctx.input(a.replay))));
  } else {
    const EndpointConfig ec = endpoint_from_json(ctx.section("endpoint"));
    json eff = qalam::to_json(ec);
    eff.erase("base_url");
    ctx.set_effective("endpoint", eff);
    if (!ctx.dry_run()) client = std::make_unique<HttpEndpoint>(ec);
  }
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }

  std::map<Suite, std::vector<std::size_t>> by_suite;
  for (std::size_t i = 0; i < items.size(); ++i) by_suite[items[i].suite].push_back(i);

  const std::string digest = ctx.config_digest();
  std::vector<json> results(items.size());
  json summaries = json::array();
  std::map<Suite, double> accuracies;
  std::vector<std::vector<std::string>> rows;
  for (const auto& [suite, idx] : by_suite) {
    std::vector<BenchmarkItem> task;
    task.reserve(idx.size());
    for (std::size_t i : idx) task.push_back(items[i]);
    const eval::TaskRun run = eval::run_task(task, *mode, *client, opts);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      json r = eval::to_json(run.results[k]);
      r["suite"] = to_string(suite);
      results[idx[k]] = std::move(r);
    }
    const auto& s = run.score;
    summaries.push_back(eval::summary_json(s, digest));
    accuracies[suite] = s.accuracy;
    rows.push_back({std::string(to_string(suite)), std::to_string(s.n_items), std::to_string(s.correct),
                    std::to_string(s.incorrect), std::to_string(s.invalid), eval::format_score(s.accuracy)});
  }
  json summary = {{"tasks", summaries}, {"mode", eval::to_string(*mode)}, {"config_digest", digest}};
  if (accuracies.size() == kAllSuites.size()) {
    const double avg = eval::aggregate(accuracies);
    summary["average"] = avg;
    rows.push_back({"Average", "", "", "", "", eval::format_score(avg)});
  }
  ctx.write_jsonl("eval_results.jsonl", results);
  ctx.write_json("eval_summary.json", summary);
  ctx.report(summary, render_table({"suite", "n", "correct", "incorrect", "invalid", "accuracy"}, rows));
  ctx.finish();
}

// --- eval aggregate ---

struct AggregateArgs {
  std::string scores;
  std::string model;
};

void run_aggregate(const AggregateArgs& a, const GlobalOptions& g) {
  Context ctx("eval aggregate", g);
  const std::vector<Suite> suites = suite_set(ctx);
  std::vector<eval::ScoreRow> rows = load_rows(ctx, a.scores);
  if (!a.model.empty()) rows = {find_row(rows, a.model)};
  json out = json::array();
  std::vector<std::vector<std::string>> table;
  for (const auto& row : rows) {
    double avg = 0.0;
    try {
      avg = eval::aggregate(row.scores, suites);
    } catch (const Error& e) {
      throw Error(e.code(), "row '" + row.model + "': " + e.what());
    }
    json entry = {{"model", row.model}, {"average", avg}, {"average_display", eval::format_score(avg)}};
    std::string reported = "", check = "";
    if (row.reported_average) {
      entry["reported_average"] = *row.reported_average;
      reported = eval::format_score(*row.reported_average);
      check = reported == eval::format_score(avg) ? "ok" : "differs";
      entry["matches_reported"] = check == "ok";
    }
    out.push_back(entry);
    table.push_back({row.model, eval::format_score(avg), reported, check});
  }
  ctx.report({{"rows", out}}, render_table({"model", "average", "reported", "check"}, table));
  ctx.finish();
}

// --- eval compare ---

struct CompareArgs {
  std::string scores;
  std::string reference;
  std::string ours;
  std::vector<std::string> against;
};

void run_compare(const CompareArgs& a, const GlobalOptions& g) {
  Context ctx("eval compare", g);
  const auto our_rows = load_rows(ctx, a.scores);
  const std::string ours_name = a.ours.empty() ? our_rows.front().model : a.ours;
  const eval::ScoreRow& ours = find_row(our_rows, ours_name);
  const auto ref_rows = a.reference.empty() ? our_rows : load_rows(ctx, a.reference);
  std::vector<eval::ScoreRow> chosen;
  for (const auto& r : ref_rows) {
    if (r.model == ours.model && a.reference.empty()) continue;
    if (!a.against.empty() && std::find(a.against.begin(), a.against.end(), r.model) == a.against.end()) continue;
    chosen.push_back(r);
  }
  for (const auto& name : a.against) find_row(ref_rows, name);
  ctx.set_effective("ours", ours.model);
  json against = json::array();
  for (const auto& r : chosen) against.push_back(r.model);
  ctx.set_effective("against", against);

  const auto refs = eval::references_from_rows(chosen);
  const auto margins = eval::compare(ours.scores, refs);
  json out = json::array();
  std::vector<std::vector<std::string>> table;
  for (const auto& m : margins) {
    out.push_back(eval::to_json(m));
    table.push_back({m.model, m.suite ? std::string(to_string(*m.suite)) : "Average", eval::format_score(m.ours),
                     eval::format_score(m.reference), eval::format_margin(m.margin)});
  }
  ctx.report({{"ours", ours.model}, {"margins", out}},
             render_table({"reference", "suite", "ours", "reference", "margin"}, table));
  ctx.finish();
}

}  // namespace

void add_eval_commands(CLI::App& app, const GlobalOptions& g, Action& action) {
  auto* ev = app.add_subcommand("eval", "Evaluation harness");
  ev->require_subcommand(1);
  {
    auto a = std::make_shared<RunArgs>();
    auto* cmd = ev->add_subcommand("run", "Score benchmark items against a model endpoint");
    cmd->add_option("--items", a->items, "Benchmark JSONL")->required();
    cmd->add_option("--mode", a->mode, "loglik or parse (default: config, else parse)");
    cmd->add_option("--norm", a->norm, "bytes, tokens or none (log-likelihood mode)");
    cmd->add_option("--replay", a->replay, "Recorded client transcript instead of a live endpoint");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_eval(*a, g); }; });
  }
  {
    auto a = std::make_shared<AggregateArgs>();
    auto* cmd = ev->add_subcommand("aggregate", "Average per-suite scores");
    cmd->add_option("--scores", a->scores, "Score table JSON or eval_summary.json")->required();
    cmd->add_option("--model", a->model, "Only this row");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_aggregate(*a, g); }; });
  }
  {
    auto a = std::make_shared<CompareArgs>();
    auto* cmd = ev->add_subcommand("compare", "Margins of one score row against references");
    cmd->add_option("--scores", a->scores, "Score table JSON or eval_summary.json")->required();
    cmd->add_option("--ours", a->ours, "Row to compare (default: first row)");
    cmd->add_option("--reference", a->reference, "Reference score table (default: --scores)");
    cmd->add_option("--against", a->against, "Restrict to these reference rows");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_compare(*a, g); }; });
  }
}

}  // namespace qalam::cli
