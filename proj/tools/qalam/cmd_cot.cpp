#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "clients.hpp"
#include "commands.hpp"
#include "qalam/cot.hpp"
#include "qalam/error.hpp"
#include "qalam/hash.hpp"
#include "qalam/jsonl.hpp"
#include "qalam/teacher.hpp"

namespace qalam::cli {

namespace {

cot::TraceFormat trace_format(Context& ctx) {
  const json& sec = ctx.section("cot");
  cot::TraceFormat f = sec.contains("format") ? cot::trace_format_from_json(sec["format"]) : cot::TraceFormat{};
  ctx.set_effective("format", cot::to_json(f));
  return f;
}

std::string read_text(Context& ctx, const std::string& path) {
  std::ifstream f(ctx.input(path), std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<json> records_json(const std::vector<cot::TraceRecord>& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(cot::to_json(r));
  return rows;
}

void write_split(Context& ctx, const cot::DistillSplit& split, std::size_t total) {
  ctx.write_jsonl("traces.jsonl", records_json(split.valid));
  ctx.write_jsonl("trace_rejects.jsonl", records_json(split.rejected));
  std::map<std::string, std::size_t> kinds;
  for (const auto& r : split.rejected) {
    for (const auto& v : r.violations) ++kinds[v.substr(0, v.find('('))];
  }
  std::vector<std::vector<std::string>> rows = {{"responses", std::to_string(total)},
                                                {"valid", std::to_string(split.valid.size())},
                                                {"rejected", std::to_string(split.rejected.size())}};
  for (const auto& [k, n] : kinds) rows.push_back({"violation " + k, std::to_string(n)});
  ctx.report({{"responses", total}, {"valid", split.valid.size()}, {"rejected", split.rejected.size()},
              {"violations", kinds}},
             render_table({"metric", "value"}, rows));
}

// --- cot stratify ---

struct StratifyArgs {
  std::string items;
  std::optional<std::size_t> buckets;
};

void run_stratify(const StratifyArgs& a, const GlobalOptions& g) {
  Context ctx("cot stratify", g);
  const json& sec = ctx.section("cot");
  const std::size_t buckets = a.buckets ? *a.buckets : sec.value("buckets", std::size_t{4});
  if (buckets == 0) throw Error("invalid_config", "buckets must be at least 1");
  cot::ComplexityWeights w;
  if (sec.contains("complexity_weights")) {
    w.question_length = sec["complexity_weights"].value("question_length", w.question_length);
    w.option_count = sec["complexity_weights"].value("option_count", w.option_count);
  }
  ctx.set_effective("buckets", buckets);
  ctx.set_effective("complexity_weights", {{"question_length", w.question_length}, {"option_count", w.option_count}});
  const auto items = read_benchmark(ctx.input(a.items));
  if (items.empty()) throw Error("invalid_argument", "stratify needs at least one item");
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }
  const auto strata = cot::stratify(items, buckets, w);
  json out = json::array();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t b = 0; b < strata.size(); ++b) {
    json ids = json::array();
    for (const auto& item : strata[b]) ids.push_back(item.task_id);
    out.push_back({{"bucket", b + 1}, {"task_ids", ids}});
    rows.push_back({std::to_string(b + 1), std::to_string(strata[b].size())});
  }
  ctx.write_json("strata.json", {{"buckets", out}});
  ctx.report({{"buckets", out}}, render_table({"bucket", "items"}, rows));
  ctx.finish();
}

// --- cot prompts ---

struct PromptsArgs {
  std::string items;
  std::string tmpl;
};

void run_prompts(const PromptsArgs& a, const GlobalOptions& g) {
  Context ctx("cot prompts", g);
  cot::PromptTemplate tmpl = cot::default_teacher_template();
  if (!a.tmpl.empty()) tmpl.text = read_text(ctx, a.tmpl);
  tmpl.format = trace_format(ctx);
  const cot::Decoding decoding = cot::decoding_from_json(ctx.section("endpoint").value("decoding", json::object()));
  ctx.set_effective("template_sha256", sha256_hex(tmpl.text));
  ctx.set_effective("decoding", cot::to_json(decoding));
  const auto items = read_benchmark(ctx.input(a.items));
  const auto requests = cot::make_requests(items, tmpl, decoding);  // validates the template
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }
  std::vector<json> rows;
  for (const auto& r : requests) rows.push_back(cot::to_json(r));
  ctx.write_jsonl("teacher_requests.jsonl", rows);
  ctx.report({{"requests", rows.size()}}, render_table({"metric", "value"}, {{"requests", std::to_string(rows.size())}}));
  ctx.finish();
}

// --- cot batch ---

struct BatchArgs {
  std::string requests;
  std::string items;
  std::string replay;
};

std::vector<cot::TeacherRequest> load_requests(Context& ctx, const std::string& path) {
  std::vector<cot::TeacherRequest> out;
  for (const auto& j : read_json_lines(ctx.input(path))) {
    cot::TeacherRequest r;
    r.item_id = j.at("item_id").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    if (j.contains("decoding")) r.decoding = cot::decoding_from_json(j["decoding"]);
    out.push_back(std::move(r));
  }
  return out;
}

void run_batch_cmd(const BatchArgs& a, const GlobalOptions& g) {
  Context ctx("cot batch", g);
  const cot::TraceFormat format = trace_format(ctx);
  const RetryPolicy policy = policy_from_json(ctx.section("cot").value("retry", json::object()), ctx.jobs());
  json retry_eff = to_json(policy);
  retry_eff.erase("max_in_flight");  // affects scheduling only
  ctx.set_effective("retry", retry_eff);
  const auto requests = load_requests(ctx, a.requests);
  const auto items = read_benchmark(ctx.input(a.items));

  std::unique_ptr<cot::TeacherEndpoint> endpoint;
  if (!a.replay.empty()) {
    ctx.set_effective("endpoint", "replay");
    endpoint = std::make_unique<ReplayTeacher>(eval::ReplayClient::from_json(read_json_file(ctx.input(a.replay))));
  } else {
    const EndpointConfig ec = endpoint_from_json(ctx.section("endpoint"));
    json eff = qalam::to_json(ec);
    eff.erase("base_url");
    ctx.set_effective("endpoint", eff);
    if (ctx.dry_run()) {
      ctx.finish();
      return;
    }
    endpoint = std::make_unique<HttpEndpoint>(ec);
  }
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }

  std::ofstream raw(ctx.output_path("raw_responses.jsonl"), std::ios::binary | std::ios::trunc);
  std::vector<json> retries;
  const auto responses = cot::run_batch(
      requests, *endpoint, policy,
      [&](const cot::TeacherResponse& r) { raw << cot::to_json(r).dump() << "\n" << std::flush; },
      [&](const RetryEvent& e) {
        std::cerr << "retry item=" << e.item_id << " attempt=" << e.attempt << " delay_ms=" << e.delay.count()
                  << " error=" << json(e.error).dump() << "\n";
        retries.push_back({{"item_id", e.item_id}, {"attempt", e.attempt}, {"error", e.error}});
      });
  raw.close();
  ctx.record_output("raw_responses.jsonl");
  std::vector<json> rows;
  for (const auto& r : responses) rows.push_back(cot::to_json(r));
  ctx.write_jsonl("responses.jsonl", rows);
  write_split(ctx, cot::split_responses(responses, items, format), responses.size());
  ctx.finish({{"retries", retries.size()}});
}

// --- cot validate ---

struct ValidateArgs {
  std::string items;
  std::string responses;
};

void run_validate(const ValidateArgs& a, const GlobalOptions& g) {
  Context ctx("cot validate", g);
  const cot::TraceFormat format = trace_format(ctx);
  const auto items = read_benchmark(ctx.input(a.items));
  std::vector<cot::TeacherResponse> responses;
  for (const auto& j : read_json_lines(ctx.input(a.responses))) {
    json row = j;
    if (!row.contains("text") && row.contains("raw")) row["text"] = row["raw"];
    responses.push_back(cot::response_from_json(row));
  }
  const auto split = cot::split_responses(responses, items, format);
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }
  write_split(ctx, split, responses.size());
  ctx.finish();
}

// --- sft reformulate ---

struct ReformulateArgs {
  std::string items;
  std::string style;
};

void run_reformulate(const ReformulateArgs& a, const GlobalOptions& g) {
  Context ctx("sft reformulate", g);
  const std::string style_name = a.style.empty() ? ctx.section("sft").value("style", std::string("latin")) : a.style;
  const auto style = cot::parse_mc_style(style_name);
  if (!style) throw Error("invalid_config", "style must be 'latin' or 'arabic', got '" + style_name + "'");
  ctx.set_effective("style", style_name);
  const auto items = read_benchmark(ctx.input(a.items));
  std::vector<json> rows;
  for (const auto& item : items) rows.push_back(cot::to_json(cot::reformulate_mc(item, *style)));
  if (ctx.dry_run()) {
    ctx.finish();
    return;
  }
  ctx.write_jsonl("sft_pairs.jsonl", rows);
  ctx.report({{"pairs", rows.size()}}, render_table({"metric", "value"}, {{"pairs", std::to_string(rows.size())}}));
  ctx.finish();
}

}  // namespace

void add_cot_commands(CLI::App& app, const GlobalOptions& g, Action& action) {
  auto* cot_cmd = app.add_subcommand("cot", "Four-phase reasoning trace tools");
  cot_cmd->require_subcommand(1);
  {
    auto a = std::make_shared<StratifyArgs>();
    auto* cmd = cot_cmd->add_subcommand("stratify", "Split questions into complexity buckets");
    cmd->add_option("--items", a->items, "Benchmark-format JSONL")->required();
    cmd->add_option("--buckets", a->buckets, "Number of buckets (default: config, else 4)");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_stratify(*a, g); }; });
  }
  {
    auto a = std::make_shared<PromptsArgs>();
    auto* cmd = cot_cmd->add_subcommand("prompts", "Render teacher prompts");
    cmd->add_option("--items", a->items, "Benchmark-format JSONL")->required();
    cmd->add_option("--template", a->tmpl, "Prompt template text file");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_prompts(*a, g); }; });
  }
  {
    auto a = std::make_shared<BatchArgs>();
    auto* cmd = cot_cmd->add_subcommand("batch", "Send teacher requests and validate the traces");
    cmd->add_option("--requests", a->requests, "teacher_requests.jsonl")->required();
    cmd->add_option("--items", a->items, "Benchmark-format JSONL the requests refer to")->required();
    cmd->add_option("--replay", a->replay, "Recorded completions instead of a live endpoint");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_batch_cmd(*a, g); }; });
  }
  {
    auto a = std::make_shared<ValidateArgs>();
    auto* cmd = cot_cmd->add_subcommand("validate", "Validate stored teacher responses");
    cmd->add_option("--items", a->items, "Benchmark-format JSONL")->required();
    cmd->add_option("--responses", a->responses, "JSONL with item_id and text (or raw)")->required();
    cmd->callback([a, &g, &action] { action = [a, &g] { run_validate(*a, g); }; });
  }
  auto* sft = app.add_subcommand("sft", "Supervised fine-tuning data tools");
  sft->require_subcommand(1);
  {
    auto a = std::make_shared<ReformulateArgs>();
    auto* cmd = sft->add_subcommand("reformulate", "Turn multiple-choice items into instruction pairs");
    cmd->add_option("--items", a->items, "Benchmark-format JSONL")->required();
    cmd->add_option("--style", a->style, "latin or arabic (default: config, else latin)");
    cmd->callback([a, &g, &action] { action = [a, &g] { run_reformulate(*a, g); }; });
  }
}

}  // namespace qalam::cli
