#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qalam/types.hpp"

namespace qalam::cot {

// The four reasoning phases, in the order they must appear.
enum class Phase { Analysis, Elimination, LinguisticCheck, Synthesis };
inline constexpr std::array kPhases = {Phase::Analysis, Phase::Elimination, Phase::LinguisticCheck, Phase::Synthesis};

// snake_case identifier: "analysis", "elimination", "linguistic_check", "synthesis".
std::string_view phase_name(Phase p);

// Section delimiters of the trace format. A header line matches when, after
// stripping markdown decoration ('#', '*', a trailing ':'), it equals the
// configured header, either half of a bilingual "English / Arabic" header, or
// one of the aliases (ASCII case-insensitive).
struct TraceFormat {
  std::array<std::string, 4> headers = {
      "### Analysis / التحليل",
      "### Elimination / الاستبعاد",
      "### Linguistic Check / التدقيق اللغوي",
      "### Synthesis / الخلاصة",
  };
  std::array<std::vector<std::string>, 4> aliases;
  // Label of the final-answer line closing the synthesis section.
  std::string answer_label = "Final answer";
  std::string version = "cot-format/1";

  const std::string& header(Phase p) const { return headers[static_cast<std::size_t>(p)]; }
};

nlohmann::json to_json(const TraceFormat& f);
TraceFormat trace_format_from_json(const nlohmann::json& j);

struct Elimination {
  int option = 0;
  std::string justification;

  bool operator==(const Elimination&) const = default;
};

struct CoTTrace {
  std::string analysis;
  std::vector<Elimination> eliminations;
  std::string linguistic_check;
  std::string synthesis;
  int final_answer = 0;
  std::string raw;

  bool operator==(const CoTTrace&) const = default;
};

enum class ViolationKind {
  MissingPhase,
  EmptyPhase,
  PhaseOrder,
  BadOptionRef,
  AnswerContradictsElimination,
  UnparseableAnswer,
  // Linguistic check never names the chosen option.
  UnverifiedAnswer,
};

std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::optional<Phase> phase;  // set for MissingPhase / EmptyPhase
  std::string detail;

  // "MissingPhase(linguistic_check)" style label.
  std::string label() const;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

struct TraceParse {
  std::optional<CoTTrace> trace;  // present iff report.valid()
  ValidationReport report;
  std::optional<int> final_answer;  // best-effort, also for invalid traces
};

// Segments `raw` by phase headers and validates every structural invariant,
// collecting all violations rather than stopping at the first.
TraceParse parse_trace(std::string_view raw, std::size_t n_options, const TraceFormat& format = {});

// Canonical rendering; parse_trace(serialize_trace(t)) reproduces t.
std::string serialize_trace(const CoTTrace& trace, const TraceFormat& format = {});

// Record written to the trace store.
struct TraceRecord {
  std::string item_id;
  std::string raw;
  bool valid = false;
  std::vector<std::string> violations;
  std::optional<int> final_answer;
};

nlohmann::json to_json(const TraceRecord& r);
TraceRecord make_record(std::string item_id, std::string_view raw, std::size_t n_options, const TraceFormat& format = {});

// --- complexity stratification ---

struct ComplexityWeights {
  double question_length = 0.5;
  double option_count = 0.5;
};

using ComplexityScorer = std::function<double(const BenchmarkItem&)>;

// Min-max normalized question token length and option count, weighted.
std::vector<double> complexity_scores(std::span<const BenchmarkItem> items, const ComplexityWeights& weights = {});

// Equal-population quantile buckets in ascending complexity (ties broken by
// input position). Bucket sizes differ by at most one.
std::vector<std::vector<BenchmarkItem>> stratify(std::span<const BenchmarkItem> items, std::size_t buckets,
                                                 const ComplexityWeights& weights = {});
std::vector<std::vector<BenchmarkItem>> stratify(std::span<const BenchmarkItem> items, std::size_t buckets,
                                                 const ComplexityScorer& scorer);

// --- teacher prompts ---

// Template text with {{slot}} placeholders. Required: question, options and
// the four *_header slots (in phase order). Optional: context, answer_label.
struct PromptTemplate {
  std::string text;
  TraceFormat format;
};

PromptTemplate default_teacher_template();
std::string render_options(const BenchmarkItem& item);
std::string render_teacher_prompt(const BenchmarkItem& item, const PromptTemplate& tmpl = default_teacher_template());

// --- supervised fine-tuning pairs ---

enum class PairKind { InstructionResponse, OpenCompletion, McReformulation };
std::string_view to_string(PairKind k);

struct InstructionPair {
  std::string instruction;
  std::string response;
  PairKind kind = PairKind::McReformulation;

  bool operator==(const InstructionPair&) const = default;
};

nlohmann::json to_json(const InstructionPair& p);

enum class McStyle { Latin, Arabic };
std::optional<McStyle> parse_mc_style(std::string_view s);

// Question + lettered options as the instruction; gold letter and option text
// as the response. Throws InvalidArgument when the gold index is missing.
InstructionPair reformulate_mc(const BenchmarkItem& item, McStyle style = McStyle::Latin);

}  // namespace qalam::cot
