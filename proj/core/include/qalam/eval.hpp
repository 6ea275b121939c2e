#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qalam/retry.hpp"
#include "qalam/types.hpp"

namespace qalam::eval {

enum class ScoringMode { LogLikelihoodNorm, ParseAfterReasoning };
enum class Norm { ByteLength, TokenLength, None };
enum class Outcome { Correct, Incorrect, Invalid };

std::string_view to_string(ScoringMode m);
std::string_view to_string(Norm n);
std::string_view to_string(Outcome o);
std::optional<ScoringMode> parse_scoring_mode(std::string_view s);
std::optional<Norm> parse_norm(std::string_view s);

struct LogProb {
  double logprob = 0.0;
  std::size_t bytes = 0;
  std::size_t tokens = 0;
};

// Model endpoint as seen by the harness. Implementations throw
// TransportError (retryable) or AuthError.
class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::string complete(const std::string& item_id, const std::string& prompt) = 0;
  virtual LogProb logprob(const std::string& prompt, const std::string& continuation) = 0;
};

struct ItemResult {
  std::string task_id;
  ScoringMode mode = ScoringMode::LogLikelihoodNorm;
  std::optional<int> predicted;
  int gold = 0;
  Outcome outcome = Outcome::Invalid;
  std::optional<std::vector<double>> per_option_scores;
  std::optional<std::string> raw_output;
  std::optional<std::pair<std::size_t, std::size_t>> reasoning_span;  // byte offsets
  std::string cause;  // why the item is Invalid, when known
};

nlohmann::json to_json(const ItemResult& r);

// Item prompt. Required slots: {{question}}, {{options}}; optional {{context}}.
struct EvalTemplate {
  std::string text = "{{context}}Question: {{question}}\n{{options}}\nAnswer:";
};

std::string render_eval_prompt(const BenchmarkItem& item, const EvalTemplate& tmpl = {});

// Scores each option as logprob(" " + option) / length and takes the argmax;
// ties go to the lowest index. Throws InvalidArgument when an option has
// zero length under `norm`; endpoint errors propagate.
ItemResult score_loglik(const BenchmarkItem& item, ModelClient& client, Norm norm = Norm::ByteLength,
                        const EvalTemplate& tmpl = {});

// Normalized scores and argmax over precomputed logprobs; shared with tests.
std::vector<double> normalized_scores(std::span<const LogProb> lps, Norm norm);
std::size_t argmax_lowest(std::span<const double> scores);

struct ExtractionConfig {
  std::string open_tag = "<think>";
  std::string close_tag = "</think>";
  bool arabic_letters = true;
};

nlohmann::json to_json(const ExtractionConfig& c);
ExtractionConfig extraction_from_json(const nlohmann::json& j);

struct Extraction {
  std::optional<int> choice;
  // [start, end) of the reasoning segment, when a closing tag exists.
  std::optional<std::pair<std::size_t, std::size_t>> reasoning_span;
  enum class Rule { ExplicitPattern, StandaloneLetter, None } rule = Rule::None;
};

// Looks only after the last closing tag (or at everything if there is none):
// first the last explicit answer pattern, then the last standalone in-range
// option letter.
Extraction extract(std::string_view output, std::size_t n_options, const ExtractionConfig& cfg = {});
std::optional<int> extract_choice(std::string_view output, std::size_t n_options, const ExtractionConfig& cfg = {});

struct BenchmarkScore {
  Suite suite = Suite::ArabicMMLU;
  ScoringMode mode = ScoringMode::LogLikelihoodNorm;
  double accuracy = 0.0;  // percent
  std::size_t n_items = 0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t invalid = 0;
};

nlohmann::json summary_json(const BenchmarkScore& s, const std::string& config_digest);

struct RunOptions {
  Norm norm = Norm::ByteLength;
  ExtractionConfig extraction;
  EvalTemplate tmpl;
  RetryPolicy policy;
  RetryListener on_retry;
};

struct TaskRun {
  BenchmarkScore score;
  std::vector<ItemResult> results;  // task-file order
};

// Items must share one suite. Per-item failures become Invalid with a cause;
// an AuthError aborts the run.
TaskRun run_task(std::span<const BenchmarkItem> items, ScoringMode mode, ModelClient& client,
                 const RunOptions& options = {});

BenchmarkScore score_results(Suite suite, ScoringMode mode, std::span<const ItemResult> results);

// Unweighted mean over exactly `suites`. Throws Error("missing_suite") naming
// the first absent suite and InvalidArgument for suites outside the set.
double aggregate(const std::map<Suite, double>& scores, std::span<const Suite> suites = kAllSuites);

// Two-decimal rendering used for every displayed score.
std::string format_score(double v);
// Signed two-decimal margin: "+4.32", "-0.95", "0.00".
std::string format_margin(double v);

struct ReferenceScore {
  std::string model;
  std::optional<Suite> suite;  // nullopt: the model's reported average
  double value = 0.0;
};

struct MarginRow {
  std::string model;
  std::optional<Suite> suite;
  double ours = 0.0;
  double reference = 0.0;
  double margin = 0.0;
};

// ours - reference for every reference entry whose suite appears in `ours`;
// averages compare against aggregate(ours) and need all seven suites.
// Throws Error("no_overlap") when nothing is comparable.
std::vector<MarginRow> compare(const std::map<Suite, double>& ours, std::span<const ReferenceScore> reference);

nlohmann::json to_json(const MarginRow& r);

// A named row of per-suite scores with an optional reported average.
struct ScoreRow {
  std::string model;
  std::map<Suite, double> scores;
  std::optional<double> reported_average;
};

// {"rows": [{"model", "scores": {suite: value}, "average"}]}
std::vector<ScoreRow> score_rows_from_json(const nlohmann::json& j);
std::vector<ReferenceScore> references_from_rows(std::span<const ScoreRow> rows);

// Replays canned outputs keyed by item id, and logprobs keyed by
// continuation text (or prompt + continuation when registered that way).
class ReplayClient : public ModelClient {
 public:
  void add_completion(std::string item_id, std::string output);
  void add_logprob(std::string continuation, LogProb lp);
  void add_logprob(std::string prompt, std::string continuation, LogProb lp);

  std::string complete(const std::string& item_id, const std::string& prompt) override;
  LogProb logprob(const std::string& prompt, const std::string& continuation) override;

  // {"completions": {id: text}, "logprobs": [{"prompt"?, "continuation", "logprob", "bytes", "tokens"}]}
  static ReplayClient from_json(const nlohmann::json& j);

 private:
  std::map<std::string, std::string> completions_;
  std::map<std::string, LogProb> by_continuation_;
  std::map<std::pair<std::string, std::string>, LogProb> by_pair_;
};

}  // namespace qalam::eval
