#include "qalam/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "letters.hpp"
#include "qalam/error.hpp"
#include "utf8.hpp"

namespace qalam::eval {

using nlohmann::json;

std::string_view to_string(ScoringMode m) {
  return m == ScoringMode::LogLikelihoodNorm ? "LogLikelihoodNorm" : "ParseAfterReasoning";
}

std::string_view to_string(Norm n) {
  switch (n) {
    case Norm::ByteLength: return "ByteLength";
    case Norm::TokenLength: return "TokenLength";
    case Norm::None: return "None";
  }
  return "ByteLength";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Correct: return "Correct";
    case Outcome::Incorrect: return "Incorrect";
    case Outcome::Invalid: return "Invalid";
  }
  return "Invalid";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::optional<ScoringMode> parse_scoring_mode(std::string_view s) {
  const std::string l = lower(s);
  if (l == "loglikelihoodnorm" || l == "loglik" || l == "log-likelihood") return ScoringMode::LogLikelihoodNorm;
  if (l == "parseafterreasoning" || l == "parse" || l == "generate") return ScoringMode::ParseAfterReasoning;
  return std::nullopt;
}

std::optional<Norm> parse_norm(std::string_view s) {
  const std::string l = lower(s);
  if (l == "bytelength" || l == "bytes") return Norm::ByteLength;
  if (l == "tokenlength" || l == "tokens") return Norm::TokenLength;
  if (l == "none") return Norm::None;
  return std::nullopt;
}

json to_json(const ItemResult& r) {
  json j = {{"task_id", r.task_id},
            {"mode", to_string(r.mode)},
            {"predicted", r.predicted ? json(*r.predicted) : json(nullptr)},
            {"gold", r.gold},
            {"outcome", to_string(r.outcome)},
            {"per_option_scores", r.per_option_scores ? json(*r.per_option_scores) : json(nullptr)},
            {"raw_output", r.raw_output ? json(*r.raw_output) : json(nullptr)},
            {"reasoning_span", r.reasoning_span ? json::array({r.reasoning_span->first, r.reasoning_span->second})
                                                : json(nullptr)}};
  if (!r.cause.empty()) j["cause"] = r.cause;
  return j;
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

std::string render_eval_prompt(const BenchmarkItem& item, const EvalTemplate& tmpl) {
  for (std::string_view slot : {"{{question}}", "{{options}}"}) {
    if (tmpl.text.find(slot) == std::string::npos) {
      throw Error("template_missing_slot", "evaluation template is missing required slot " + std::string(slot));
    }
  }
  std::string options;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    options += option_letter(i);
    options += ". " + item.options[i] + "\n";
  }
  if (!options.empty()) options.pop_back();
  std::string out = tmpl.text;
  replace_all(out, "{{context}}", item.context ? "Context: " + *item.context + "\n" : "");
  replace_all(out, "{{options}}", options);
  replace_all(out, "{{question}}", item.question);
  return out;
}

std::vector<double> normalized_scores(std::span<const LogProb> lps, Norm norm) {
  std::vector<double> out;
  out.reserve(lps.size());
  for (std::size_t i = 0; i < lps.size(); ++i) {
    double len = 1.0;
    if (norm == Norm::ByteLength) len = static_cast<double>(lps[i].bytes);
    if (norm == Norm::TokenLength) len = static_cast<double>(lps[i].tokens);
    if (len == 0.0) {
      throw InvalidArgument("option " + std::string(1, option_letter(i)) + " has zero length under " +
                            std::string(to_string(norm)) + " normalization");
    }
    out.push_back(lps[i].logprob / len);
  }
  return out;
}

std::size_t argmax_lowest(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

namespace {

void settle(ItemResult& r) {
  if (!r.predicted) {
    r.outcome = Outcome::Invalid;
  } else {
    r.outcome = *r.predicted == r.gold ? Outcome::Correct : Outcome::Incorrect;
  }
}

}  // namespace

ItemResult score_loglik(const BenchmarkItem& item, ModelClient& client, Norm norm, const EvalTemplate& tmpl) {
  const std::string prompt = render_eval_prompt(item, tmpl);
  std::vector<LogProb> lps;
  lps.reserve(item.options.size());
  for (const auto& option : item.options) lps.push_back(client.logprob(prompt, " " + option));
  ItemResult r;
  r.task_id = item.task_id;
  r.mode = ScoringMode::LogLikelihoodNorm;
  r.gold = item.gold_index;
  r.per_option_scores = normalized_scores(lps, norm);
  r.predicted = static_cast<int>(argmax_lowest(*r.per_option_scores));
  settle(r);
  return r;
}

json to_json(const ExtractionConfig& c) {
  return {{"open_tag", c.open_tag}, {"close_tag", c.close_tag}, {"arabic_letters", c.arabic_letters}};
}

ExtractionConfig extraction_from_json(const json& j) {
  ExtractionConfig c;
  c.open_tag = j.value("open_tag", c.open_tag);
  c.close_tag = j.value("close_tag", c.close_tag);
  c.arabic_letters = j.value("arabic_letters", c.arabic_letters);
  if (c.close_tag.empty()) throw InvalidArgument("close_tag must not be empty");
  return c;
}

namespace {

const std::vector<std::u32string>& answer_keywords() {
  static const std::vector<std::u32string> k = [] {
    std::vector<std::u32string> v = {U"final answer",
                                     U"correct answer",
                                     U"answer",
                                     utf8::decode("الإجابة النهائية"),
                                     utf8::decode("الاجابة النهائية"),
                                     utf8::decode("الإجابة الصحيحة"),
                                     utf8::decode("الاجابة الصحيحة"),
                                     utf8::decode("الإجابة"),
                                     utf8::decode("الاجابة"),
                                     utf8::decode("الجواب")};
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    return v;
  }();
  return k;
}

bool skippable(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'*' || c == U'`'; }

std::size_t skip(std::u32string_view s, std::size_t i) {
  while (i < s.size() && skippable(s[i])) ++i;
  return i;
}

bool starts_with_at(std::u32string_view s, std::size_t i, std::u32string_view word) {
  return s.size() - i >= word.size() && s.compare(i, word.size(), word) == 0 &&
         (i + word.size() == s.size() || !letters::is_word_char(s[i + word.size()]));
}

std::optional<int> explicit_pattern(std::u32string_view s, std::size_t n_options, bool arabic) {
  std::u32string low(s);
  for (auto& c : low) {
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  }
  static const std::u32string kIs = U"is";
  static const std::u32string kHiya = utf8::decode("هي");
  std::optional<int> last;
  for (std::size_t i = 0; i < low.size(); ++i) {
    if (i > 0 && letters::is_word_char(low[i - 1])) continue;
    for (const auto& k : answer_keywords()) {
      if (low.compare(i, k.size(), k) != 0) continue;
      std::size_t j = skip(s, i + k.size());
      if (j < s.size() && (s[j] == U':' || s[j] == 0xFF1A)) j = skip(s, j + 1);
      if (starts_with_at(low, j, kIs)) j = skip(s, j + kIs.size());
      else if (starts_with_at(low, j, kHiya)) j = skip(s, j + kHiya.size());
      if (j < s.size() && s[j] == U':') j = skip(s, j + 1);
      if (j < s.size() && (s[j] == U'(' || s[j] == U'[')) j = skip(s, j + 1);
      std::size_t end = 0;
      if (auto idx = letters::standalone_at(s, j, arabic, end); idx && static_cast<std::size_t>(*idx) < n_options) {
        last = idx;
      }
      break;
    }
  }
  return last;
}

std::optional<int> last_standalone(std::u32string_view s, std::size_t n_options, bool arabic) {
  for (std::size_t i = s.size(); i-- > 0;) {
    std::size_t end = 0;
    if (auto idx = letters::standalone_at(s, i, arabic, end); idx && static_cast<std::size_t>(*idx) < n_options) {
      return idx;
    }
  }
  return std::nullopt;
}

}  // namespace

Extraction extract(std::string_view output, std::size_t n_options, const ExtractionConfig& cfg) {
  if (n_options < 2) throw InvalidArgument("extraction needs at least two options");
  Extraction ex;
  std::string_view tail = output;
  if (const auto close = output.rfind(cfg.close_tag); close != std::string_view::npos && !cfg.close_tag.empty()) {
    std::size_t start = 0;
    if (!cfg.open_tag.empty()) {
      if (const auto open = output.find(cfg.open_tag); open != std::string_view::npos && open < close) start = open;
    }
    ex.reasoning_span = std::make_pair(start, close + cfg.close_tag.size());
    tail = output.substr(close + cfg.close_tag.size());
  }
  const std::u32string s = utf8::decode(tail);
  if (auto idx = explicit_pattern(s, n_options, cfg.arabic_letters)) {
    ex.choice = idx;
    ex.rule = Extraction::Rule::ExplicitPattern;
  } else if (auto idx2 = last_standalone(s, n_options, cfg.arabic_letters)) {
    ex.choice = idx2;
    ex.rule = Extraction::Rule::StandaloneLetter;
  }
  return ex;
}

std::optional<int> extract_choice(std::string_view output, std::size_t n_options, const ExtractionConfig& cfg) {
  return extract(output, n_options, cfg).choice;
}

json summary_json(const BenchmarkScore& s, const std::string& config_digest) {
  return {{"suite", to_string(s.suite)},
          {"mode", to_string(s.mode)},
          {"accuracy", s.accuracy},
          {"accuracy_display", format_score(s.accuracy)},
          {"counts",
           {{"n_items", s.n_items}, {"correct", s.correct}, {"incorrect", s.incorrect}, {"invalid", s.invalid}}},
          {"config_digest", config_digest}};
}

BenchmarkScore score_results(Suite suite, ScoringMode mode, std::span<const ItemResult> results) {
  if (results.empty()) throw Error("empty_task", "empty task");
  BenchmarkScore s;
  s.suite = suite;
  s.mode = mode;
  s.n_items = results.size();
  for (const auto& r : results) {
    switch (r.outcome) {
      case Outcome::Correct: ++s.correct; break;
      case Outcome::Incorrect: ++s.incorrect; break;
      case Outcome::Invalid: ++s.invalid; break;
    }
  }
  s.accuracy = 100.0 * static_cast<double>(s.correct) / static_cast<double>(s.n_items);
  return s;
}

TaskRun run_task(std::span<const BenchmarkItem> items, ScoringMode mode, ModelClient& client,
                 const RunOptions& options) {
  if (items.empty()) throw Error("empty_task", "empty task");
  const Suite suite = items.front().suite;
  for (const auto& item : items) {
    if (item.suite != suite) {
      throw InvalidArgument("task mixes suites " + std::string(to_string(suite)) + " and " +
                            std::string(to_string(item.suite)));
    }
  }

  TaskRun run;
  run.results.resize(items.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::exception_ptr fatal;

  auto score_one = [&](const BenchmarkItem& item) {
    ItemResult r;
    r.task_id = item.task_id;
    r.mode = mode;
    r.gold = item.gold_index;
    try {
      const RetryOutcome outcome = retry_call(
          options.policy, item.task_id,
          [&] {
            if (mode == ScoringMode::LogLikelihoodNorm) {
              r = score_loglik(item, client, options.norm, options.tmpl);
            } else {
              std::string out = client.complete(item.task_id, render_eval_prompt(item, options.tmpl));
              const Extraction ex = extract(out, item.options.size(), options.extraction);
              r.predicted = ex.choice;
              r.reasoning_span = ex.reasoning_span;
              r.raw_output = std::move(out);
              if (!ex.choice) r.cause = "no option could be extracted";
              settle(r);
            }
          },
          [&](const RetryEvent& e) {
            if (options.on_retry) {
              std::lock_guard lock(mu);
              options.on_retry(e);
            }
          });
      if (!outcome.ok) {
        r.predicted.reset();
        r.outcome = Outcome::Invalid;
        r.cause = "transport_error: " + outcome.last_error;
      }
    } catch (const AuthError&) {
      throw;
    } catch (const Error& e) {
      r.predicted.reset();
      r.per_option_scores.reset();
      r.outcome = Outcome::Invalid;
      r.cause = e.code() + ": " + e.what();
    }
    return r;
  };

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      try {
        run.results[i] = score_one(items[i]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
        return;
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.policy.max_in_flight, items.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  run.score = score_results(suite, mode, run.results);
  return run;
}

double aggregate(const std::map<Suite, double>& scores, std::span<const Suite> suites) {
  if (suites.empty()) throw InvalidArgument("suite set is empty");
  for (const auto& [suite, value] : scores) {
    if (std::find(suites.begin(), suites.end(), suite) == suites.end()) {
      throw InvalidArgument("unexpected suite " + std::string(to_string(suite)));
    }
  }
  double sum = 0.0;
  for (Suite s : suites) {
    const auto it = scores.find(s);
    if (it == scores.end()) throw Error("missing_suite", "missing suite " + std::string(to_string(s)));
    sum += it->second;
  }
  return sum / static_cast<double>(suites.size());
}

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string format_margin(double v) {
  const std::string s = format_score(v);
  if (s == "0.00" || s.front() == '-') return s;
  return "+" + s;
}

std::vector<MarginRow> compare(const std::map<Suite, double>& ours, std::span<const ReferenceScore> reference) {
  std::optional<double> our_avg;
  if (ours.size() == kAllSuites.size()) our_avg = aggregate(ours);
  std::vector<MarginRow> rows;
  for (const auto& ref : reference) {
    double mine = 0.0;
    if (ref.suite) {
      const auto it = ours.find(*ref.suite);
      if (it == ours.end()) continue;
      mine = it->second;
    } else {
      if (!our_avg) continue;
      mine = *our_avg;
    }
    rows.push_back({ref.model, ref.suite, mine, ref.value, mine - ref.value});
  }
  if (rows.empty()) throw Error("no_overlap", "no overlapping suites between scores and references");
  return rows;
}

json to_json(const MarginRow& r) {
  return {{"model", r.model},
          {"suite", r.suite ? std::string(to_string(*r.suite)) : std::string("Average")},
          {"ours", r.ours},
          {"reference", r.reference},
          {"margin", r.margin},
          {"margin_display", format_margin(r.margin)}};
}

std::vector<ScoreRow> score_rows_from_json(const json& j) {
  if (!j.contains("rows") || !j["rows"].is_array()) throw InvalidArgument("score file needs a \"rows\" array");
  std::vector<ScoreRow> rows;
  for (const auto& r : j["rows"]) {
    ScoreRow row;
    row.model = r.at("model").get<std::string>();
    for (const auto& [key, value] : r.at("scores").items()) {
      const auto suite = parse_suite(key);
      if (!suite) throw InvalidArgument("row '" + row.model + "' has unknown suite '" + key + "'");
      row.scores[*suite] = value.get<double>();
    }
    if (r.contains("average") && !r["average"].is_null()) row.reported_average = r["average"].get<double>();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ReferenceScore> references_from_rows(std::span<const ScoreRow> rows) {
  std::vector<ReferenceScore> out;
  for (const auto& row : rows) {
    for (Suite s : kAllSuites) {
      if (auto it = row.scores.find(s); it != row.scores.end()) out.push_back({row.model, s, it->second});
    }
    if (row.reported_average) {
      out.push_back({row.model, std::nullopt, *row.reported_average});
    } else if (row.scores.size() == kAllSuites.size()) {
      out.push_back({row.model, std::nullopt, aggregate(row.scores)});
    }
  }
  return out;
}

void ReplayClient::add_completion(std::string item_id, std::string output) {
  completions_[std::move(item_id)] = std::move(output);
}

void ReplayClient::add_logprob(std::string continuation, LogProb lp) { by_continuation_[std::move(continuation)] = lp; }

void ReplayClient::add_logprob(std::string prompt, std::string continuation, LogProb lp) {
  by_pair_[{std::move(prompt), std::move(continuation)}] = lp;
}

std::string ReplayClient::complete(const std::string& item_id, const std::string&) {
  const auto it = completions_.find(item_id);
  if (it == completions_.end()) throw Error("missing_transcript", "no recorded completion for '" + item_id + "'");
  return it->second;
}

LogProb ReplayClient::logprob(const std::string& prompt, const std::string& continuation) {
  if (auto it = by_pair_.find({prompt, continuation}); it != by_pair_.end()) return it->second;
  if (auto it = by_continuation_.find(continuation); it != by_continuation_.end()) return it->second;
  throw Error("missing_transcript", "no recorded logprob for continuation '" + continuation + "'");
}

ReplayClient ReplayClient::from_json(const json& j) {
  ReplayClient c;
  if (j.contains("completions")) {
    for (const auto& [id, text] : j["completions"].items()) c.add_completion(id, text.get<std::string>());
  }
  if (j.contains("logprobs")) {
    for (const auto& e : j["logprobs"]) {
      LogProb lp{e.at("logprob").get<double>(), e.value("bytes", std::size_t{0}), e.value("tokens", std::size_t{0})};
      if (e.contains("prompt")) {
        c.add_logprob(e["prompt"].get<std::string>(), e.at("continuation").get<std::string>(), lp);
      } else {
        c.add_logprob(e.at("continuation").get<std::string>(), lp);
      }
    }
  }
  return c;
}

}  // namespace qalam::eval
