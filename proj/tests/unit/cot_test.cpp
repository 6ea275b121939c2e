#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "mutate.hpp"
#include "qalam/cot.hpp"
#include "qalam/error.hpp"
#include "qalam/tokenizer.hpp"
#include "synth.hpp"

namespace qalam::cot {
namespace {

const char* kWellFormed =
    "### Analysis / التحليل\n"
    "The question asks which plural form is standard. The governing rule is the broken plural pattern.\n"
    "\n"
    "### Elimination / الاستبعاد\n"
    "- B: a sound plural, not used for this noun.\n"
    "- D: a dialect form,\n"
    "  not accepted in formal writing.\n"
    "\n"
    "### Linguistic Check / التدقيق اللغوي\n"
    "Option C follows the fu'ul pattern and agrees with the sentence.\n"
    "\n"
    "### Synthesis / الخلاصة\n"
    "Only C is both standard and grammatical.\n"
    "Final answer: C\n";

std::multiset<std::string> labels(const ValidationReport& r) {
  std::multiset<std::string> out;
  for (const auto& v : r.violations) out.insert(v.label());
  return out;
}

TEST(ParseTrace, WellFormedExample) {
  const auto p = parse_trace(kWellFormed, 4);
  ASSERT_TRUE(p.report.valid()) << *labels(p.report).begin();
  ASSERT_TRUE(p.trace);
  EXPECT_EQ(p.trace->final_answer, 2);
  ASSERT_EQ(p.trace->eliminations.size(), 2u);
  EXPECT_EQ(p.trace->eliminations[0].option, 1);
  EXPECT_EQ(p.trace->eliminations[1].option, 3);
  EXPECT_EQ(p.trace->eliminations[1].justification, "a dialect form,\nnot accepted in formal writing.");
  EXPECT_EQ(p.trace->synthesis, "Only C is both standard and grammatical.");
  EXPECT_EQ(p.trace->raw, kWellFormed);
}

TEST(ParseTrace, AnswerThatWasEliminated) {
  std::string raw = kWellFormed;
  raw.replace(raw.find("Final answer: C"), 15, "Final answer: B");
  raw.replace(raw.find("Option C"), 8, "Option B");
  const auto p = parse_trace(raw, 4);
  EXPECT_FALSE(p.trace);
  EXPECT_EQ(labels(p.report), std::multiset<std::string>{"AnswerContradictsElimination"});
  EXPECT_EQ(p.final_answer, 1);
}

TEST(ParseTrace, MissingLinguisticCheck) {
  std::string raw = kWellFormed;
  const auto from = raw.find("### Linguistic");
  raw.erase(from, raw.find("### Synthesis") - from);
  const auto p = parse_trace(raw, 4);
  EXPECT_EQ(labels(p.report), std::multiset<std::string>{"MissingPhase(linguistic_check)"});
}

TEST(ParseTrace, HeaderVariantsAndArabicAnswer) {
  const std::string raw =
      "## التحليل\nتحليل السؤال\n"
      "**Elimination:**\n* (A) خطأ\n"
      "Linguistic check\nالخيار ب صحيح\n"
      "### الخلاصة\nالخلاصة هنا\nالإجابة النهائية: ب\n";
  const auto p = parse_trace(raw, 3);
  ASSERT_TRUE(p.report.valid()) << *labels(p.report).begin();
  EXPECT_EQ(p.trace->final_answer, 1);
  EXPECT_EQ(p.trace->eliminations[0].option, 0);
}

TEST(ParseTrace, CollectsEveryViolation) {
  const std::string raw =
      "### Synthesis / الخلاصة\nno answer here\n"
      "### Analysis / التحليل\n\n"
      "### Elimination / الاستبعاد\n- F: out of range\n";
  const auto p = parse_trace(raw, 4);
  EXPECT_EQ(labels(p.report), (std::multiset<std::string>{"MissingPhase(linguistic_check)", "PhaseOrder",
                                                          "EmptyPhase(analysis)", "BadOptionRef",
                                                          "UnparseableAnswer"}));
  EXPECT_FALSE(p.final_answer);
}

TEST(ParseTrace, NeedsTwoOptions) { EXPECT_THROW(parse_trace(kWellFormed, 1), InvalidArgument); }

TEST(TraceRoundTrip, RandomValidTraces) {
  synth::Rng rng(100);
  synth::Vocab vocab;
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 2 + rng.below(5);
    CoTTrace t = synth::valid_trace(rng, vocab, n);
    t.raw = serialize_trace(t);
    const auto p = parse_trace(t.raw, n);
    ASSERT_TRUE(p.trace) << t.raw;
    EXPECT_EQ(*p.trace, t);
  }
}

TEST(TraceMutation, EachMutationAlone) {
  synth::Rng rng(101);
  synth::Vocab vocab;
  for (auto m : synth::kAllMutations) {
    for (int rep = 0; rep < 5; ++rep) {
      const std::size_t n = 2 + rng.below(5);
      const auto t = synth::valid_trace(rng, vocab, n);
      const auto mt = synth::mutate(rng, vocab, t, n, {m});
      EXPECT_EQ(labels(parse_trace(mt.raw, n).report), mt.expected) << mt.raw;
    }
  }
}

TEST(TraceMutation, RandomCombinationsReportExactlyTheInjectedKinds) {
  synth::Rng rng(102);
  synth::Vocab vocab;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng.below(5);
    const auto t = synth::valid_trace(rng, vocab, n);
    const auto mt = synth::mutate(rng, vocab, t, n, synth::pick_mutations(rng));
    const auto p = parse_trace(mt.raw, n);
    EXPECT_FALSE(p.trace);
    EXPECT_EQ(labels(p.report), mt.expected) << mt.raw;
  }
}

TEST(TraceRecord, JsonShape) {
  const auto ok = to_json(make_record("i1", kWellFormed, 4));
  EXPECT_EQ(ok["item_id"], "i1");
  EXPECT_EQ(ok["valid"], true);
  EXPECT_EQ(ok["final_answer"], "C");
  EXPECT_TRUE(ok["violations"].empty());
  const auto bad = to_json(make_record("i2", "nothing", 4));
  EXPECT_EQ(bad["valid"], false);
  EXPECT_TRUE(bad["final_answer"].is_null());
  EXPECT_EQ(bad["violations"].size(), 4u);
}

BenchmarkItem item(std::size_t question_words, std::size_t options, std::string id) {
  BenchmarkItem it;
  it.task_id = std::move(id);
  for (std::size_t i = 0; i < question_words; ++i) it.question += (i ? " w" : "w") + std::to_string(i);
  for (std::size_t i = 0; i < options; ++i) it.options.push_back("o" + std::to_string(i));
  it.gold_index = 0;
  return it;
}

TEST(Stratify, OneBucketHoldsEverything) {
  const std::vector items{item(5, 2, "a"), item(3, 4, "b"), item(9, 3, "c")};
  const auto b = stratify(items, 1);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].size(), 3u);
}

TEST(Stratify, ShorterPairFirst) {
  const std::vector items{item(8, 4, "c"), item(2, 4, "a"), item(12, 4, "d"), item(5, 4, "b")};
  const auto b = stratify(items, 2);
  ASSERT_EQ(b.size(), 2u);
  ASSERT_EQ(b[0].size(), 2u);
  EXPECT_EQ(b[0][0].task_id, "a");
  EXPECT_EQ(b[0][1].task_id, "b");
  EXPECT_EQ(b[1][0].task_id, "c");
  EXPECT_EQ(b[1][1].task_id, "d");
}

TEST(Stratify, Errors) {
  EXPECT_THROW(stratify(std::vector<BenchmarkItem>{}, 2), InvalidArgument);
  EXPECT_THROW(stratify(std::vector{item(1, 2, "a")}, 0), InvalidArgument);
}

TEST(Stratify, QuantilesMatchAnIndependentSort) {
  synth::Rng rng(103);
  std::vector<BenchmarkItem> items;
  for (int i = 0; i < 100; ++i) items.push_back(item(1 + rng.below(60), 2 + rng.below(4), std::to_string(i)));

  // Independent score and ordering.
  std::vector<double> len, opts;
  for (const auto& it : items) {
    len.push_back(static_cast<double>(count_tokens(it.question)));
    opts.push_back(static_cast<double>(it.options.size()));
  }
  auto minmax = [](std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo, span = *hi - *lo;
    for (auto& x : v) x = span > 0 ? (x - a) / span : 0.0;
  };
  minmax(len);
  minmax(opts);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = 0.5 * len[a] + 0.5 * opts[a], sb = 0.5 * len[b] + 0.5 * opts[b];
    return sa != sb ? sa < sb : a < b;
  });

  for (std::size_t buckets : {3u, 4u, 7u}) {
    const auto got = stratify(items, buckets);
    ASSERT_EQ(got.size(), buckets);
    std::size_t lo = items.size(), hi = 0, pos = 0;
    for (const auto& b : got) {
      lo = std::min(lo, b.size());
      hi = std::max(hi, b.size());
      for (const auto& it : b) EXPECT_EQ(it.task_id, items[order[pos++]].task_id);
    }
    EXPECT_LE(hi - lo, 1u);
    EXPECT_EQ(pos, items.size());
  }
}

TEST(Stratify, PluggableScorer) {
  const std::vector items{item(8, 4, "long"), item(2, 4, "short")};
  const auto b = stratify(items, 2, [](const BenchmarkItem& it) { return -static_cast<double>(it.question.size()); });
  EXPECT_EQ(b[0][0].task_id, "long");
}

TEST(TeacherPrompt, ContainsHeadersAndOptions) {
  PromptTemplate minimal;
  minimal.text = "{{analysis_header}}\n{{elimination_header}}\n{{linguistic_check_header}}\n{{synthesis_header}}\n"
                 "{{question}}\n{{options}}";
  BenchmarkItem it = item(3, 0, "x");
  it.options = {"نعم", "لا"};
  const std::string p = render_teacher_prompt(it, minimal);
  std::size_t last = 0;
  for (Phase ph : kPhases) {
    const auto at = p.find(minimal.format.header(ph));
    ASSERT_NE(at, std::string::npos);
    EXPECT_GE(at, last);
    last = at;
  }
  EXPECT_NE(p.find("A) نعم"), std::string::npos);
  EXPECT_NE(p.find("B) لا"), std::string::npos);
  EXPECT_EQ(render_teacher_prompt(it, minimal), p);

  const std::string full = render_teacher_prompt(it);
  EXPECT_NE(full.find("principle"), std::string::npos);
  EXPECT_NE(full.find("Final answer: X"), std::string::npos);
}

TEST(TeacherPrompt, MissingSlotIsNamed) {
  PromptTemplate t;
  t.text = "{{analysis_header}} {{elimination_header}} {{synthesis_header}} {{question}} {{options}}";
  try {
    render_teacher_prompt(item(3, 2, "x"), t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "template_missing_slot");
    EXPECT_NE(std::string(e.what()).find("linguistic_check_header"), std::string::npos);
  }
}

TEST(TeacherPrompt, QuestionIsNotExpanded) {
  BenchmarkItem it = item(0, 2, "x");
  it.question = "what is {{options}}?";
  const std::string p = render_teacher_prompt(it);
  EXPECT_NE(p.find("what is {{options}}?"), std::string::npos);
}

TEST(Reformulate, Examples) {
  BenchmarkItem two = item(3, 0, "x");
  two.options = {"الرباط", "فاس"};
  two.gold_index = 0;
  const auto a = reformulate_mc(two);
  EXPECT_EQ(a.response, "Answer: A) الرباط");
  EXPECT_EQ(a.kind, PairKind::McReformulation);
  EXPECT_NE(a.instruction.find("B) فاس"), std::string::npos);
  EXPECT_EQ(reformulate_mc(two), a);

  BenchmarkItem four = item(3, 4, "y");
  four.gold_index = 3;
  EXPECT_EQ(reformulate_mc(four).response, "Answer: D) o3");
  EXPECT_EQ(reformulate_mc(four, McStyle::Arabic).response, "الإجابة: د) o3");

  four.gold_index = -1;
  EXPECT_THROW(reformulate_mc(four), InvalidArgument);
}

}  // namespace
}  // namespace qalam::cot
