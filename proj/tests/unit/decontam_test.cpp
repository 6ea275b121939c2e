#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "oracle.hpp"
#include "qalam/decontam.hpp"
#include "qalam/error.hpp"
#include "qalam/normalize.hpp"
#include "synth.hpp"

namespace qalam::decontam {
namespace {

BenchmarkItem item_with(std::string question, std::vector<std::string> options, std::string id = "t") {
  BenchmarkItem item;
  item.suite = Suite::ArabicMMLU;
  item.task_id = std::move(id);
  item.question = std::move(question);
  item.options = std::move(options);
  return item;
}

std::string words(std::size_t n, const std::string& stem = "w") {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + stem + std::to_string(i);
  return out;
}

TEST(BuildIndex, ThirteenTokensGiveOneNgram) {
  // 11 question tokens + two one-token options = 13 canonical tokens.
  const auto idx = build_index(std::vector{item_with(words(11), {"yes", "no"})}, {}, 1);
  EXPECT_EQ(idx.ngram_count(), 1u);
  EXPECT_EQ(idx.item_count(), 1u);
}

TEST(BuildIndex, TwelveTokensGiveNoNgramButASignature) {
  const auto idx = build_index(std::vector{item_with(words(10), {"yes", "no"})}, {}, 1);
  EXPECT_EQ(idx.ngram_count(), 0u);
  EXPECT_EQ(idx.signature(0).size(), 128u);
  EXPECT_FALSE(is_empty_signature(idx.signature(0)));
}

TEST(BuildIndex, IdenticalItemsHaveIdenticalSignatures) {
  const auto a = item_with("ما عاصمة المغرب؟", {"الرباط", "فاس"}, "a");
  auto b = a;
  b.task_id = "b";
  const auto idx = build_index(std::vector{a, b}, {}, 9);
  EXPECT_EQ(idx.signature(0), idx.signature(1));
}

TEST(BuildIndex, RejectsBadInput) {
  EXPECT_THROW(build_index(std::vector<BenchmarkItem>{}, {}, 1), InvalidArgument);
  IndexParams p;
  p.bands = 10;
  EXPECT_THROW(build_index(std::vector{item_with("q", {"a", "b"})}, p, 1), InvalidArgument);
  p = {};
  p.ngram = 1;
  EXPECT_THROW(build_index(std::vector{item_with("q", {"a", "b"})}, p, 1), InvalidArgument);
}

TEST(Check, VerbatimQuestionIsExactHit) {
  const auto item = item_with("ما هو جمع كلمة كتاب؟", {"كتب", "كتابات", "مكاتب"});
  const auto idx = build_index(std::vector{item}, {}, 1);
  Document doc;
  doc.id = "d";
  doc.text = item.question;
  const Report r = check(doc, idx);
  EXPECT_EQ(r.verdict, Verdict::ExactHit);
  ASSERT_TRUE(r.matched_item);
  EXPECT_EQ(r.matched_item->task_id, item.task_id);
  EXPECT_FALSE(r.similarity);
}

TEST(Check, NgramInsideLongerDocumentIsExactHit) {
  synth::Rng rng(1);
  synth::Vocab vocab;
  const auto item = synth::make_item(rng, vocab, Suite::AraTrust, "x", 30, 4);
  const auto idx = build_index(std::vector{item}, {}, 1);
  const auto q = oracle::tokens(canonicalize(item.question));
  std::string window;
  for (std::size_t i = 5; i < 18; ++i) window += (i > 5 ? " " : "") + q[i];
  Document doc = synth::make_document("d", vocab.text(rng, Language::Arabic, 40) + " " + window + " " +
                                               vocab.text(rng, Language::Arabic, 40),
                                      Language::Arabic, Category::Stem);
  const Report r = check(doc, idx);
  EXPECT_EQ(r.verdict, Verdict::ExactHit);
  EXPECT_EQ(*r.evidence, window);
}

TEST(Check, OneTokenReplacedInHundredIsFuzzyHitNearTrueJaccard) {
  synth::Rng rng(2);
  synth::Vocab vocab;
  BenchmarkItem item = item_with(vocab.text(rng, Language::Arabic, 96), {}, "p");
  for (int i = 0; i < 4; ++i) item.options.push_back(vocab.text(rng, Language::Arabic, 1));
  const std::string passage = synth::item_text(item);
  ASSERT_EQ(oracle::tokens(canonicalize(passage)).size(), 100u);
  auto toks = oracle::tokens(passage);
  toks[50] = vocab.word(rng, Language::Arabic);
  const std::string edited = synth::join(toks);

  // Oracle first: the true shingle Jaccard must clear the threshold.
  const double truth =
      oracle::jaccard(oracle::shingles(canonicalize(passage), 5), oracle::shingles(canonicalize(edited), 5));
  ASSERT_GE(truth, 0.8);

  IndexParams p;
  p.ngram = 60;  // no 60-token window survives the edit, so only the fuzzy path can fire
  const auto idx = build_index(std::vector{item}, p, 4);
  Document doc = synth::make_document("d", edited, Language::Arabic, Category::Stem);
  const Report r = check(doc, idx);
  ASSERT_EQ(r.verdict, Verdict::FuzzyHit);
  ASSERT_TRUE(r.similarity);
  EXPECT_GE(*r.similarity, 0.8);
  EXPECT_NEAR(*r.similarity, truth, 0.1);
  EXPECT_TRUE(r.evidence->starts_with("lsh band "));

  // Under the default 13-gram window the surviving windows make it exact.
  const auto idx13 = build_index(std::vector{item}, {}, 4);
  EXPECT_EQ(check(doc, idx13).verdict, Verdict::ExactHit);
}

TEST(Check, DisjointTextIsClean) {
  const auto idx = build_index(std::vector{item_with("abcdefgh ijklmnop", {"qrstu", "vwxyz"})}, {}, 1);
  Document doc;
  doc.id = "d";
  doc.text = "١٢٣٤٥ ٦٧٨٩٠";
  const Report r = check(doc, idx);
  EXPECT_EQ(r.verdict, Verdict::Clean);
  EXPECT_FALSE(r.matched_item);
}

TEST(Check, ClassifierHookIsLastResort) {
  const auto item = item_with("alpha beta gamma delta", {"epsilon", "zeta"});
  const auto idx = build_index(std::vector{item}, {}, 1);
  Document doc;
  doc.id = "d";
  doc.text = "we discussed alpha beta and then gamma delta epsilon at length, zeta too, among many other unrelated things "
             "that make this document long enough to stay far from the fuzzy threshold";
  EXPECT_EQ(check(doc, idx).verdict, Verdict::Clean);
  const ContainmentHook hook(0.5);
  const Report r = check(doc, idx, &hook);
  EXPECT_EQ(r.verdict, Verdict::ClassifierHit);
  EXPECT_TRUE(r.evidence->starts_with("bigram-containment/1 score"));
  EXPECT_FALSE(r.similarity);
}

TEST(Check, VersionMismatchIsAnError) {
  const auto idx = build_index(std::vector{item_with("q one two", {"a", "b"})}, {}, 1);
  auto j = idx.to_json();
  j["normalization_version"] = "ar-norm/0";
  const auto stale = ContaminationIndex::from_json(j);
  Document doc;
  doc.id = "d";
  doc.text = "x";
  EXPECT_THROW(check(doc, stale), VersionMismatch);
}

TEST(Index, SaveLoadRoundTrip) {
  synth::Rng rng(5);
  synth::Vocab vocab;
  std::vector<BenchmarkItem> items;
  for (int i = 0; i < 20; ++i) items.push_back(synth::make_item(rng, vocab, Suite::ALRAGE, std::to_string(i), 20, 4));
  const auto idx = build_index(items, {}, 17);
  const auto path = std::filesystem::temp_directory_path() / "qalam_index_roundtrip.json";
  idx.save(path);
  const auto loaded = ContaminationIndex::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(loaded.to_json(), idx.to_json());
  for (int i = 0; i < 20; ++i) {
    Document d = synth::make_document("d" + std::to_string(i),
                                      i % 2 ? synth::item_text(items[i]) : vocab.text(rng, Language::Arabic, 40),
                                      Language::Arabic, Category::Stem);
    EXPECT_EQ(check(d, loaded), check(d, idx));
  }
}

class FilterTest : public ::testing::Test {
 protected:
  void SetUp() override {
    for (int i = 0; i < 5; ++i) items.push_back(synth::make_item(rng, vocab, Suite::ArabicEXAMS, "i" + std::to_string(i), 25, 4));
    for (int i = 0; i < 10; ++i) {
      const std::string text = i % 3 == 0 && i < 9 ? synth::item_text(items[i / 3]) : vocab.text(rng, Language::Arabic, 50);
      docs.push_back(synth::make_document("d" + std::to_string(i), text, Language::Arabic, Category::Stem));
    }
  }
  synth::Rng rng{6};
  synth::Vocab vocab;
  std::vector<BenchmarkItem> items;
  std::vector<Document> docs;
};

TEST_F(FilterTest, EmptyCorpus) {
  const auto idx = build_index(items, {}, 1);
  const auto r = filter_corpus(std::vector<Document>{}, idx);
  EXPECT_TRUE(r.retained.empty());
  EXPECT_TRUE(r.reports.empty());
}

TEST_F(FilterTest, ThreeVerbatimOfTen) {
  const auto idx = build_index(items, {}, 1);
  const auto r = filter_corpus(docs, idx, nullptr, 3);
  ASSERT_EQ(r.retained.size(), 7u);
  ASSERT_EQ(r.reports.size(), 3u);
  for (const auto& rep : r.reports) EXPECT_EQ(rep.verdict, Verdict::ExactHit);
  EXPECT_EQ(r.reports[0].doc_id, "d0");
  EXPECT_EQ(r.reports[1].doc_id, "d3");
  EXPECT_EQ(r.reports[2].doc_id, "d6");
  EXPECT_EQ(r.retained[0].id, "d1");  // order preserved
  EXPECT_EQ(r.retained.back().id, "d9");
}

TEST_F(FilterTest, IdempotentAndDeterministic) {
  const auto idx = build_index(items, {}, 1);
  const auto once = filter_corpus(docs, idx, nullptr, 2);
  const auto twice = filter_corpus(once.retained, idx, nullptr, 1);
  EXPECT_EQ(twice.retained, once.retained);
  EXPECT_TRUE(twice.reports.empty());
  const auto again = filter_corpus(docs, build_index(items, {}, 1), nullptr, 4);
  EXPECT_EQ(again.reports, once.reports);
}

TEST(FilterProperty, SoundnessAgainstBruteForceNgramScan) {
  synth::Rng rng(8);
  synth::Vocab vocab(8, 300);  // small vocabulary so partial overlaps are common
  std::vector<BenchmarkItem> items;
  for (int i = 0; i < 30; ++i) items.push_back(synth::make_item(rng, vocab, Suite::AlGhafa, std::to_string(i), 15 + rng.below(20), 3));
  std::vector<Document> docs;
  for (int i = 0; i < 300; ++i) {
    std::string text = vocab.text(rng, Language::Arabic, 20 + rng.below(60));
    if (rng.chance(0.3)) {
      const auto t = oracle::tokens(canonicalize(synth::item_text(items[rng.below(items.size())])));
      const std::size_t len = 8 + rng.below(10), from = rng.below(t.size() - len);
      for (std::size_t k = from; k < from + len; ++k) text += " " + t[k];
    }
    docs.push_back(synth::make_document(std::to_string(i), text, Language::Arabic, Category::Social));
  }
  const auto idx = build_index(items, {}, 3);
  const auto r = filter_corpus(docs, idx, nullptr, 2);
  std::set<std::string> item_grams;
  for (const auto& it : items) {
    for (const auto& g : oracle::ngrams(canonicalize(synth::item_text(it)), 13)) item_grams.insert(g);
  }
  std::size_t with_overlap = 0;
  for (const auto& d : docs) {
    for (const auto& g : oracle::ngrams(canonicalize(d.text), 13)) {
      if (item_grams.count(g)) {
        ++with_overlap;
        break;
      }
    }
  }
  for (const auto& d : r.retained) {
    for (const auto& g : oracle::ngrams(canonicalize(d.text), 13)) ASSERT_FALSE(item_grams.count(g)) << d.id;
  }
  EXPECT_GT(with_overlap, 0u);
}

TEST(ReportJson, FieldNames) {
  Report r;
  r.doc_id = "d";
  r.verdict = Verdict::FuzzyHit;
  r.matched_item = ItemRef{Suite::MadinahQA, "t9"};
  r.similarity = 0.85;
  const auto j = to_json(r);
  EXPECT_EQ(j["doc_id"], "d");
  EXPECT_EQ(j["verdict"], "FuzzyHit");
  EXPECT_EQ(j["matched_suite"], "MadinahQA");
  EXPECT_EQ(j["matched_task_id"], "t9");
  EXPECT_DOUBLE_EQ(j["similarity"].get<double>(), 0.85);
}

}  // namespace
}  // namespace qalam::decontam
