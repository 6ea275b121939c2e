#include "qalam/cot.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "letters.hpp"
#include "qalam/error.hpp"
#include "qalam/tokenizer.hpp"
#include "utf8.hpp"

namespace qalam::cot {

using nlohmann::json;

namespace {

constexpr std::string_view kSpace = " \t\r\n";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kSpace);
  return s.substr(b, e - b + 1);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

struct Line {
  std::string_view text;
};

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    std::string_view line = s.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == s.size()) break;
    start = end + 1;
  }
  return lines;
}

// Lowercased header text without markdown decoration.
std::string header_key(std::string_view line) {
  std::string_view s = trim(line);
  while (!s.empty() && (s.front() == '#' || s.front() == '*' || s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ':' || s.back() == '*' || s.back() == '#' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return ascii_lower(s);
}

std::array<std::vector<std::string>, 4> header_keys(const TraceFormat& f) {
  std::array<std::vector<std::string>, 4> keys;
  for (std::size_t p = 0; p < 4; ++p) {
    keys[p].push_back(header_key(f.headers[p]));
    const std::string_view h = f.headers[p];
    if (auto slash = h.find(" / "); slash != std::string_view::npos) {
      keys[p].push_back(header_key(h.substr(0, slash)));
      keys[p].push_back(header_key(h.substr(slash + 3)));
    }
    for (const auto& a : f.aliases[p]) keys[p].push_back(header_key(a));
  }
  return keys;
}

std::optional<std::size_t> match_header(std::string_view line, const std::array<std::vector<std::string>, 4>& keys) {
  if (trim(line).empty()) return std::nullopt;
  const std::string k = header_key(line);
  if (k.empty()) return std::nullopt;
  for (std::size_t p = 0; p < 4; ++p) {
    if (std::find(keys[p].begin(), keys[p].end(), k) != keys[p].end()) return p;
  }
  return std::nullopt;
}

std::string join_trimmed(const std::vector<std::string_view>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return std::string(trim(out));
}

std::size_t skip_spaces(std::u32string_view s, std::size_t i) {
  while (i < s.size() && (s[i] == U' ' || s[i] == U'\t')) ++i;
  return i;
}

bool is_dash(char32_t c) { return c == U'-' || c == 0x2013 || c == 0x2014; }

struct Bullet {
  int option;
  std::string justification;
};

// "- B: text", "* (C) text", "• D) text". A bare "- A text" is prose, not a bullet.
std::optional<Bullet> parse_bullet(std::string_view line) {
  const std::u32string s = utf8::decode(line);
  std::size_t i = skip_spaces(s, 0);
  if (i >= s.size() || !(s[i] == U'-' || s[i] == U'*' || s[i] == 0x2022)) return std::nullopt;
  i = skip_spaces(s, i + 1);
  bool paren = false;
  if (i < s.size() && s[i] == U'(') {
    paren = true;
    i = skip_spaces(s, i + 1);
  }
  std::size_t end = 0;
  auto idx = letters::standalone_at(s, i, true, end);
  if (!idx) return std::nullopt;
  i = skip_spaces(s, end);
  bool delimited = false;
  if (paren) {
    if (i >= s.size() || s[i] != U')') return std::nullopt;
    delimited = true;
    i = skip_spaces(s, i + 1);
  }
  if (i < s.size() && (s[i] == U':' || s[i] == U'.' || s[i] == U')' || is_dash(s[i]))) {
    delimited = true;
    ++i;
  }
  if (!delimited) return std::nullopt;
  return Bullet{*idx, std::string(trim(utf8::encode(s.substr(i))))};
}

struct AnswerLine {
  int option;
};

std::vector<std::u32string> answer_keywords(const TraceFormat& f) {
  std::vector<std::u32string> k = {utf8::decode(ascii_lower(f.answer_label)), U"final answer", U"answer",
                                   utf8::decode("الإجابة النهائية"), utf8::decode("الاجابة النهائية"),
                                   utf8::decode("الإجابة"), utf8::decode("الاجابة"), utf8::decode("الجواب")};
  // Longest first so "final answer" wins over "answer".
  std::sort(k.begin(), k.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return k;
}

std::u32string lower32(std::u32string s) {
  for (auto& c : s) {
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  }
  return s;
}

// "Final answer: C", "**Answer:** (B)", "الإجابة النهائية: ج".
std::optional<AnswerLine> parse_answer_line(std::string_view line, const std::vector<std::u32string>& keywords) {
  const std::u32string s = utf8::decode(line);
  const std::u32string lower = lower32(s);
  std::size_t i = skip_spaces(s, 0);
  while (i < s.size() && s[i] == U'*') ++i;
  i = skip_spaces(s, i);
  const std::u32string* hit = nullptr;
  for (const auto& k : keywords) {
    if (lower.compare(i, k.size(), k) == 0) {
      hit = &k;
      break;
    }
  }
  if (!hit) return std::nullopt;
  i += hit->size();
  while (i < s.size() && (s[i] == U'*' || s[i] == U' ' || s[i] == U'\t')) ++i;
  if (i >= s.size() || !(s[i] == U':' || s[i] == 0xFF1A)) return std::nullopt;
  ++i;
  while (i < s.size() && (s[i] == U'*' || s[i] == U' ' || s[i] == U'\t' || s[i] == U'(')) ++i;
  std::size_t end = 0;
  auto idx = letters::standalone_at(s, i, true, end);
  if (!idx) return std::nullopt;
  return AnswerLine{*idx};
}

bool mentions_option(std::string_view text, int option) {
  const std::u32string s = utf8::decode(text);
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::size_t end = 0;
    if (auto idx = letters::standalone_at(s, i, true, end); idx && *idx == option) return true;
  }
  return false;
}

}  // namespace

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::Analysis: return "analysis";
    case Phase::Elimination: return "elimination";
    case Phase::LinguisticCheck: return "linguistic_check";
    case Phase::Synthesis: return "synthesis";
  }
  return "analysis";
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::MissingPhase: return "MissingPhase";
    case ViolationKind::EmptyPhase: return "EmptyPhase";
    case ViolationKind::PhaseOrder: return "PhaseOrder";
    case ViolationKind::BadOptionRef: return "BadOptionRef";
    case ViolationKind::AnswerContradictsElimination: return "AnswerContradictsElimination";
    case ViolationKind::UnparseableAnswer: return "UnparseableAnswer";
    case ViolationKind::UnverifiedAnswer: return "UnverifiedAnswer";
  }
  return "MissingPhase";
}

std::string Violation::label() const {
  std::string s(to_string(kind));
  if (phase) s += "(" + std::string(phase_name(*phase)) + ")";
  return s;
}

json to_json(const TraceFormat& f) {
  json aliases = json::object();
  for (Phase p : kPhases) aliases[std::string(phase_name(p))] = f.aliases[static_cast<std::size_t>(p)];
  return {{"headers", f.headers}, {"aliases", aliases}, {"answer_label", f.answer_label}, {"version", f.version}};
}

TraceFormat trace_format_from_json(const json& j) {
  TraceFormat f;
  if (j.contains("headers")) {
    const auto& h = j.at("headers");
    if (!h.is_array() || h.size() != 4) throw InvalidArgument("trace format needs exactly four headers");
    for (std::size_t i = 0; i < 4; ++i) f.headers[i] = h[i].get<std::string>();
  }
  if (j.contains("aliases")) {
    for (Phase p : kPhases) {
      f.aliases[static_cast<std::size_t>(p)] =
          j["aliases"].value(std::string(phase_name(p)), std::vector<std::string>{});
    }
  }
  f.answer_label = j.value("answer_label", f.answer_label);
  f.version = j.value("version", f.version);
  return f;
}

TraceParse parse_trace(std::string_view raw, std::size_t n_options, const TraceFormat& format) {
  if (n_options < 2) throw InvalidArgument("parse_trace needs at least two options");
  TraceParse out;
  auto& violations = out.report.violations;

  const auto lines = split_lines(raw);
  const auto keys = header_keys(format);
  std::array<std::optional<std::size_t>, 4> header_line;
  std::vector<std::pair<std::size_t, std::size_t>> found;  // (line, phase) in text order
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (auto p = match_header(lines[i], keys); p && !header_line[*p]) {
      header_line[*p] = i;
      found.emplace_back(i, *p);
    }
  }

  for (Phase p : kPhases) {
    if (!header_line[static_cast<std::size_t>(p)]) {
      violations.push_back({ViolationKind::MissingPhase, p, "header '" + format.header(p) + "' not found"});
    }
  }
  for (std::size_t k = 1; k < found.size(); ++k) {
    if (found[k].second < found[k - 1].second) {
      violations.push_back({ViolationKind::PhaseOrder, std::nullopt, "phases are not in the required order"});
      break;
    }
  }

  std::array<std::vector<std::string_view>, 4> body;
  for (std::size_t k = 0; k < found.size(); ++k) {
    const std::size_t from = found[k].first + 1;
    const std::size_t to = k + 1 < found.size() ? found[k + 1].first : lines.size();
    body[found[k].second].assign(lines.begin() + static_cast<std::ptrdiff_t>(from),
                                 lines.begin() + static_cast<std::ptrdiff_t>(to));
  }
  auto present = [&](Phase p) { return header_line[static_cast<std::size_t>(p)].has_value(); };
  auto lines_of = [&](Phase p) -> const std::vector<std::string_view>& { return body[static_cast<std::size_t>(p)]; };

  CoTTrace trace;
  trace.raw = std::string(raw);

  if (present(Phase::Analysis)) {
    trace.analysis = join_trimmed(lines_of(Phase::Analysis));
    if (trace.analysis.empty()) violations.push_back({ViolationKind::EmptyPhase, Phase::Analysis, "no content"});
  }

  std::set<int> eliminated;
  if (present(Phase::Elimination)) {
    for (std::string_view line : lines_of(Phase::Elimination)) {
      if (auto b = parse_bullet(line)) {
        if (b->option < 0 || static_cast<std::size_t>(b->option) >= n_options) {
          violations.push_back({ViolationKind::BadOptionRef, std::nullopt,
                                "elimination names option " + std::to_string(b->option) + " of " +
                                    std::to_string(n_options)});
        } else if (!eliminated.insert(b->option).second) {
          violations.push_back({ViolationKind::BadOptionRef, std::nullopt,
                                std::string("option ") + option_letter(static_cast<std::size_t>(b->option)) +
                                    " eliminated more than once"});
        }
        trace.eliminations.push_back({b->option, std::move(b->justification)});
      } else if (!trim(line).empty() && !trace.eliminations.empty()) {
        auto& j = trace.eliminations.back().justification;
        if (!j.empty()) j += '\n';
        j += trim(line);
      }
    }
    if (trace.eliminations.empty()) {
      violations.push_back({ViolationKind::EmptyPhase, Phase::Elimination, "no elimination bullets"});
    }
  }

  if (present(Phase::LinguisticCheck)) {
    trace.linguistic_check = join_trimmed(lines_of(Phase::LinguisticCheck));
    if (trace.linguistic_check.empty()) {
      violations.push_back({ViolationKind::EmptyPhase, Phase::LinguisticCheck, "no content"});
    }
  }

  if (present(Phase::Synthesis)) {
    const auto keywords = answer_keywords(format);
    const auto& syn = lines_of(Phase::Synthesis);
    std::optional<std::size_t> answer_at;
    std::optional<int> answer;
    for (std::size_t i = syn.size(); i-- > 0;) {
      if (auto a = parse_answer_line(syn[i], keywords)) {
        answer_at = i;
        answer = a->option;
        break;
      }
    }
    std::vector<std::string_view> rest;
    for (std::size_t i = 0; i < syn.size(); ++i) {
      if (i != answer_at) rest.push_back(syn[i]);
    }
    trace.synthesis = join_trimmed(rest);
    if (trace.synthesis.empty()) violations.push_back({ViolationKind::EmptyPhase, Phase::Synthesis, "no content"});

    if (!answer) {
      violations.push_back({ViolationKind::UnparseableAnswer, std::nullopt, "no final-answer line in synthesis"});
    } else if (*answer < 0 || static_cast<std::size_t>(*answer) >= n_options) {
      violations.push_back({ViolationKind::UnparseableAnswer, std::nullopt,
                            "final answer is outside the " + std::to_string(n_options) + " options"});
    } else {
      trace.final_answer = *answer;
      out.final_answer = *answer;
      if (eliminated.contains(*answer)) {
        violations.push_back({ViolationKind::AnswerContradictsElimination, std::nullopt,
                              std::string("final answer ") + option_letter(static_cast<std::size_t>(*answer)) +
                                  " was eliminated"});
      }
      if (present(Phase::LinguisticCheck) && !trace.linguistic_check.empty() &&
          !mentions_option(trace.linguistic_check, *answer)) {
        violations.push_back({ViolationKind::UnverifiedAnswer, std::nullopt,
                              "linguistic check does not reference the chosen option"});
      }
    }
  }

  if (violations.empty()) out.trace = std::move(trace);
  return out;
}

std::string serialize_trace(const CoTTrace& t, const TraceFormat& f) {
  std::string out;
  out += f.header(Phase::Analysis) + "\n" + t.analysis + "\n\n";
  out += f.header(Phase::Elimination) + "\n";
  for (const auto& e : t.eliminations) {
    out += "- ";
    out += option_letter(static_cast<std::size_t>(e.option));
    out += ": " + e.justification + "\n";
  }
  out += "\n" + f.header(Phase::LinguisticCheck) + "\n" + t.linguistic_check + "\n\n";
  out += f.header(Phase::Synthesis) + "\n" + t.synthesis + "\n";
  out += f.answer_label + ": ";
  out += option_letter(static_cast<std::size_t>(t.final_answer));
  out += "\n";
  return out;
}

json to_json(const TraceRecord& r) {
  return {{"item_id", r.item_id},
          {"raw", r.raw},
          {"valid", r.valid},
          {"violations", r.violations},
          {"final_answer", r.final_answer ? json(std::string(1, option_letter(static_cast<std::size_t>(*r.final_answer))))
                                          : json(nullptr)}};
}

TraceRecord make_record(std::string item_id, std::string_view raw, std::size_t n_options, const TraceFormat& format) {
  const TraceParse parsed = parse_trace(raw, n_options, format);
  TraceRecord r;
  r.item_id = std::move(item_id);
  r.raw = std::string(raw);
  r.valid = parsed.report.valid();
  for (const auto& v : parsed.report.violations) r.violations.push_back(v.label());
  r.final_answer = parsed.final_answer;
  return r;
}

std::vector<double> complexity_scores(std::span<const BenchmarkItem> items, const ComplexityWeights& weights) {
  std::vector<double> len(items.size()), opts(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    len[i] = static_cast<double>(count_tokens(items[i].question));
    opts[i] = static_cast<double>(items[i].options.size());
  }
  auto normalize = [](std::vector<double>& v) {
    if (v.empty()) return;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double min = *lo, range = *hi - *lo;
    for (double& x : v) x = range > 0 ? (x - min) / range : 0.0;
  };
  normalize(len);
  normalize(opts);
  std::vector<double> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    out[i] = weights.question_length * len[i] + weights.option_count * opts[i];
  }
  return out;
}

namespace {

std::vector<std::vector<BenchmarkItem>> bucketize(std::span<const BenchmarkItem> items, std::size_t buckets,
                                                  const std::vector<double>& scores) {
  if (buckets == 0) throw InvalidArgument("stratify needs at least one bucket");
  if (items.empty()) throw InvalidArgument("stratify needs at least one item");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<std::vector<BenchmarkItem>> out(buckets);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    out[rank * buckets / order.size()].push_back(items[order[rank]]);
  }
  return out;
}

}  // namespace

std::vector<std::vector<BenchmarkItem>> stratify(std::span<const BenchmarkItem> items, std::size_t buckets,
                                                 const ComplexityWeights& weights) {
  return bucketize(items, buckets, complexity_scores(items, weights));
}

std::vector<std::vector<BenchmarkItem>> stratify(std::span<const BenchmarkItem> items, std::size_t buckets,
                                                 const ComplexityScorer& scorer) {
  std::vector<double> scores;
  scores.reserve(items.size());
  for (const auto& item : items) scores.push_back(scorer(item));
  return bucketize(items, buckets, scores);
}

PromptTemplate default_teacher_template() {
  PromptTemplate t;
  t.text =
      "You are an expert in Arabic language, culture and reasoning. Solve the multiple-choice question below and "
      "write your reasoning in exactly four sections, using these headers verbatim and in this order.\n"
      "\n"
      "{{analysis_header}}\n"
      "State the core problem and the rule, principle or norm that governs it. When the question turns on a "
      "cultural or ethical dilemma, name the specific principles in tension.\n"
      "\n"
      "{{elimination_header}}\n"
      "Rule out each tempting but incorrect option on its own line, formatted as \"- X: justification\" where X is "
      "the option letter.\n"
      "\n"
      "{{linguistic_check_header}}\n"
      "Verify that your chosen option, named by its letter, respects Arabic grammatical, morphological and "
      "stylistic constraints, and correct yourself if it does not.\n"
      "\n"
      "{{synthesis_header}}\n"
      "Summarize the decision in one or two sentences, then end with a line of the form \"{{answer_label}}: X\".\n"
      "\n"
      "{{context}}"
      "Question:\n{{question}}\n"
      "\n"
      "Options:\n{{options}}\n";
  return t;
}

std::string render_options(const BenchmarkItem& item) {
  std::string out;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    if (i) out += '\n';
    out += option_letter(i);
    out += ") " + item.options[i];
  }
  return out;
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

std::string render_teacher_prompt(const BenchmarkItem& item, const PromptTemplate& tmpl) {
  static constexpr std::array<std::string_view, 6> kRequired = {
      "question", "options", "analysis_header", "elimination_header", "linguistic_check_header", "synthesis_header"};
  std::array<std::size_t, 4> header_pos{};
  for (std::size_t i = 0; i < kRequired.size(); ++i) {
    const std::string slot = "{{" + std::string(kRequired[i]) + "}}";
    const auto pos = tmpl.text.find(slot);
    if (pos == std::string::npos) {
      throw Error("template_missing_slot", "prompt template is missing required slot " + slot);
    }
    if (i >= 2) header_pos[i - 2] = pos;
  }
  if (!std::is_sorted(header_pos.begin(), header_pos.end())) {
    throw Error("template_slot_order", "phase header slots must appear in phase order");
  }
  std::string out = tmpl.text;
  const std::string context = item.context ? "Context:\n" + *item.context + "\n\n" : "";
  replace_all(out, "{{analysis_header}}", tmpl.format.header(Phase::Analysis));
  replace_all(out, "{{elimination_header}}", tmpl.format.header(Phase::Elimination));
  replace_all(out, "{{linguistic_check_header}}", tmpl.format.header(Phase::LinguisticCheck));
  replace_all(out, "{{synthesis_header}}", tmpl.format.header(Phase::Synthesis));
  replace_all(out, "{{answer_label}}", tmpl.format.answer_label);
  replace_all(out, "{{context}}", context);
  replace_all(out, "{{options}}", render_options(item));
  // Last, so question text containing "{{...}}" is never expanded.
  replace_all(out, "{{question}}", item.question);
  return out;
}

std::string_view to_string(PairKind k) {
  switch (k) {
    case PairKind::InstructionResponse: return "InstructionResponse";
    case PairKind::OpenCompletion: return "OpenCompletion";
    case PairKind::McReformulation: return "McReformulation";
  }
  return "McReformulation";
}

json to_json(const InstructionPair& p) {
  return {{"instruction", p.instruction}, {"response", p.response}, {"kind", to_string(p.kind)}};
}

std::optional<McStyle> parse_mc_style(std::string_view s) {
  if (s == "latin" || s == "Latin") return McStyle::Latin;
  if (s == "arabic" || s == "Arabic") return McStyle::Arabic;
  return std::nullopt;
}

InstructionPair reformulate_mc(const BenchmarkItem& item, McStyle style) {
  if (item.options.size() < 2) throw InvalidArgument("multiple-choice reformulation needs at least two options");
  if (item.gold_index < 0 || static_cast<std::size_t>(item.gold_index) >= item.options.size()) {
    throw InvalidArgument("item '" + item.task_id + "' has no valid gold index");
  }
  auto label = [&](std::size_t i) {
    return style == McStyle::Latin ? std::string(1, option_letter(i)) : std::string(arabic_option_letter(i));
  };
  InstructionPair pair;
  pair.kind = PairKind::McReformulation;
  std::string& in = pair.instruction;
  if (style == McStyle::Latin) {
    if (item.context) in += "Context:\n" + *item.context + "\n\n";
    in += "Question:\n" + item.question + "\n\nOptions:\n";
  } else {
    if (item.context) in += "السياق:\n" + *item.context + "\n\n";
    in += "السؤال:\n" + item.question + "\n\nالخيارات:\n";
  }
  for (std::size_t i = 0; i < item.options.size(); ++i) in += label(i) + ") " + item.options[i] + "\n";
  in += style == McStyle::Latin ? "\nAnswer with the letter of the correct option." : "\nأجب بحرف الخيار الصحيح.";

  const auto gold = static_cast<std::size_t>(item.gold_index);
  pair.response = (style == McStyle::Latin ? "Answer: " : "الإجابة: ") + label(gold) + ") " + item.options[gold];
  return pair;
}

}  // namespace qalam::cot
