#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qalam/error.hpp"
#include "qalam/jsonl.hpp"
#include "synth.hpp"

namespace qalam {
namespace {

namespace fs = std::filesystem;

class TempFile {
 public:
  explicit TempFile(const std::string& content) {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("qalam_jsonl_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::ofstream(path_, std::ios::binary) << content;
  }
  ~TempFile() { fs::remove(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

const char* kDoc = R"({"id":"d1","text":"كتاب جديد","language":"Arabic","dialect":"Gulf","category":"Literature","source":"s"})";

TEST(Ingest, EmptyFileGivesEmptyStream) {
  TempFile f("");
  const auto r = ingest(f.path(), Schema::Document);
  EXPECT_TRUE(r.documents.empty());
  EXPECT_TRUE(r.diagnostics.empty());
}

TEST(Ingest, SkipModeReportsMalformedLine) {
  TempFile f(std::string(kDoc) + "\n{\"id\": \"d2\", \n");
  IngestOptions opts;
  opts.on_invalid = OnInvalid::Skip;
  const auto r = ingest(f.path(), Schema::Document, opts);
  ASSERT_EQ(r.documents.size(), 1u);
  EXPECT_EQ(r.documents[0].token_count, 2u);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].line, 2u);
  EXPECT_GT(r.diagnostics[0].position, 0u);
  EXPECT_TRUE(r.diagnostics[0].field.empty());
}

TEST(Ingest, AbortIsDefaultAndReportsPosition) {
  TempFile f(std::string(kDoc) + "\nnot json\n");
  try {
    ingest(f.path(), Schema::Document);
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.code(), "malformed_json");
    EXPECT_EQ(e.line(), 2u);
    EXPECT_GT(e.position(), 0u);
  }
}

TEST(Ingest, GoldIndexEqualToOptionCountNamesField) {
  TempFile f(R"({"suite":"MadinahQA","task_id":"t1","question":"q","options":["a","b"],"gold_index":2})" "\n");
  try {
    ingest(f.path(), Schema::Benchmark);
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.code(), "invariant_violation");
    EXPECT_EQ(e.field(), "gold_index");
    EXPECT_NE(std::string(e.what()).find("gold_index"), std::string::npos);
  }
}

TEST(Ingest, DuplicateOptionsAfterNormalization) {
  TempFile f(R"({"suite":"AraTrust","task_id":"t1","question":"q","options":["كِتاب","كتاب"],"gold_index":0})" "\n");
  IngestOptions opts;
  opts.on_invalid = OnInvalid::Skip;
  const auto r = ingest(f.path(), Schema::Benchmark, opts);
  EXPECT_TRUE(r.items.empty());
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].field, "options");
}

TEST(Ingest, DialectOnlyForArabic) {
  TempFile f(R"({"id":"e","text":"hello","language":"English","dialect":"Gulf","category":"Stem","source":""})" "\n");
  IngestOptions opts;
  opts.on_invalid = OnInvalid::Skip;
  const auto r = ingest(f.path(), Schema::Document, opts);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].field, "dialect");
}

TEST(Ingest, DuplicateIdAndEmptyId) {
  TempFile f(std::string(kDoc) + "\n" + kDoc + "\n" +
             R"({"id":"","text":"x","language":"Other","category":"Stem","source":""})" + "\n");
  IngestOptions opts;
  opts.on_invalid = OnInvalid::Skip;
  const auto r = ingest(f.path(), Schema::Document, opts);
  EXPECT_EQ(r.documents.size(), 1u);
  ASSERT_EQ(r.diagnostics.size(), 2u);
  EXPECT_EQ(r.diagnostics[0].field, "id");
  EXPECT_EQ(r.diagnostics[1].field, "id");
}

TEST(Ingest, WrongTokenCountIsRejected) {
  TempFile f(R"({"id":"a","text":"a, b","language":"English","category":"Stem","source":"","token_count":2})" "\n");
  try {
    ingest(f.path(), Schema::Document);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_EQ(e.field(), "token_count");
  }
}

TEST(Ingest, MissingFile) {
  try {
    ingest("/nonexistent/qalam.jsonl", Schema::Document);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "missing_input");
  }
}

TEST(Ingest, RoundTripPreservesUnknownFields) {
  synth::Rng rng(3);
  synth::Vocab vocab;
  std::vector<Document> docs;
  for (int i = 0; i < 50; ++i) {
    const Language lang = i % 3 == 0 ? Language::English : Language::Arabic;
    Document d = synth::make_document("doc-" + std::to_string(i), vocab.text(rng, lang, 1 + rng.below(30), true), lang,
                                      kAllCategories[rng.below(6)]);
    if (i % 4 == 0) d.extra = {{"url", "https://example.org/" + std::to_string(i)}, {"score", i * 0.5}};
    if (i % 5 == 0 && lang == Language::Arabic) d.dialect.reset();
    docs.push_back(d);
  }
  std::ostringstream out;
  write_jsonl(out, docs);
  TempFile f(out.str());
  EXPECT_EQ(read_documents(f.path()), docs);

  std::vector<BenchmarkItem> items;
  for (int i = 0; i < 30; ++i) {
    auto item = synth::make_item(rng, vocab, kAllSuites[i % 7], "t" + std::to_string(i), 5 + rng.below(10),
                                 2 + rng.below(4));
    if (i % 3 == 0) item.context = vocab.text(rng, Language::Arabic, 10);
    if (i % 4 == 0) item.extra = {{"subject", "grammar"}};
    items.push_back(item);
  }
  std::ostringstream out2;
  write_jsonl(out2, items);
  TempFile f2(out2.str());
  EXPECT_EQ(read_benchmark(f2.path()), items);
}

TEST(Ingest, BlankLinesSkippedButCounted) {
  TempFile f("\n\n" + std::string(kDoc) + "\n\nbad\n");
  IngestOptions opts;
  opts.on_invalid = OnInvalid::Skip;
  const auto r = ingest(f.path(), Schema::Document, opts);
  EXPECT_EQ(r.documents.size(), 1u);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].line, 5u);
}

}  // namespace
}  // namespace qalam
