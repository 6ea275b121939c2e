#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "qalam/tokenizer.hpp"
#include "qalam/types.hpp"

namespace qalam {

enum class Schema { Document, Benchmark };
enum class OnInvalid { Abort, Skip };

struct IngestOptions {
  OnInvalid on_invalid = OnInvalid::Abort;
  // Tokenizer used to fill Document::token_count; defaults to default_tokenizer().
  const Tokenizer* tokenizer = nullptr;
};

// One rejected input line. `field` is empty for JSON syntax errors.
struct Diagnostic {
  std::size_t line = 0;
  std::size_t position = 0;
  std::string field;
  std::string message;
};

nlohmann::json to_json(const Document& doc);
nlohmann::json to_json(const BenchmarkItem& item);
nlohmann::json to_json(const Diagnostic& d);

// Build and validate a record from one decoded JSON object. Throws
// InvariantViolation naming the field at fault.
Document document_from_json(const nlohmann::json& j, const Tokenizer& tokenizer = default_tokenizer());
BenchmarkItem benchmark_from_json(const nlohmann::json& j);

// Single-consumer stream over a JSONL source. In Abort mode the first bad
// line throws IngestError; in Skip mode it is recorded as a Diagnostic.
template <typename Record>
class JsonlReader {
 public:
  JsonlReader(std::istream& in, IngestOptions options) : in_(in), options_(options) {}

  std::optional<Record> next();
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
  std::size_t line() const { return line_; }

 private:
  Record parse_line(const nlohmann::json& j);
  void reject(std::size_t position, std::string field, const std::string& message);

  std::istream& in_;
  IngestOptions options_;
  std::size_t line_ = 0;
  std::vector<Diagnostic> diagnostics_;
  std::unordered_set<std::string> seen_ids_;
};

using DocumentReader = JsonlReader<Document>;
using BenchmarkReader = JsonlReader<BenchmarkItem>;

extern template class JsonlReader<Document>;
extern template class JsonlReader<BenchmarkItem>;

struct Ingested {
  std::vector<Document> documents;
  std::vector<BenchmarkItem> items;
  std::vector<Diagnostic> diagnostics;
};

// Reads the whole file. Throws Error("missing_input") if it cannot be opened.
Ingested ingest(const std::filesystem::path& path, Schema schema, const IngestOptions& options = {});
std::vector<Document> read_documents(const std::filesystem::path& path, const IngestOptions& options = {});
std::vector<BenchmarkItem> read_benchmark(const std::filesystem::path& path, const IngestOptions& options = {});

void write_jsonl(std::ostream& out, const std::vector<Document>& docs);
void write_jsonl(std::ostream& out, const std::vector<BenchmarkItem>& items);

// Reads a JSONL file of arbitrary objects (no schema), aborting on bad JSON.
std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path);
// Reads an entire JSON document.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace qalam
