#include "qalam/jsonl.hpp"

#include <fstream>
#include <set>
#include <type_traits>

#include "qalam/error.hpp"

namespace qalam {

using nlohmann::json;

namespace {

const std::set<std::string>& document_fields() {
  static const std::set<std::string> f = {"id", "text", "language", "dialect", "category", "source", "token_count"};
  return f;
}

const std::set<std::string>& benchmark_fields() {
  static const std::set<std::string> f = {"suite", "task_id", "question", "options", "gold_index", "context"};
  return f;
}

const json& require(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw InvariantViolation(field, "required field missing");
  return *it;
}

std::string require_string(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_string()) throw InvariantViolation(field, "expected a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw InvariantViolation(field, "expected a string or null");
  return it->get<std::string>();
}

json collect_extra(const json& j, const std::set<std::string>& known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) extra[it.key()] = it.value();
  }
  return extra;
}

}  // namespace

json to_json(const Document& doc) {
  json j = doc.extra.is_object() ? doc.extra : json::object();
  j["id"] = doc.id;
  j["text"] = doc.text;
  j["language"] = to_string(doc.language);
  j["dialect"] = doc.dialect ? json(to_string(*doc.dialect)) : json(nullptr);
  j["category"] = to_string(doc.category);
  j["source"] = doc.source;
  j["token_count"] = doc.token_count;
  return j;
}

json to_json(const BenchmarkItem& item) {
  json j = item.extra.is_object() ? item.extra : json::object();
  j["suite"] = to_string(item.suite);
  j["task_id"] = item.task_id;
  j["question"] = item.question;
  j["options"] = item.options;
  j["gold_index"] = item.gold_index;
  j["context"] = item.context ? json(*item.context) : json(nullptr);
  return j;
}

json to_json(const Diagnostic& d) {
  json j = {{"line", d.line}, {"message", d.message}};
  if (d.position) j["position"] = d.position;
  if (!d.field.empty()) j["field"] = d.field;
  return j;
}

Document document_from_json(const json& j, const Tokenizer& tokenizer) {
  if (!j.is_object()) throw InvariantViolation("<record>", "expected a JSON object");
  Document doc;
  doc.id = require_string(j, "id");
  doc.text = require_string(j, "text");

  const std::string language = require_string(j, "language");
  auto lang = parse_language(language);
  if (!lang) throw InvariantViolation("language", "unknown language '" + language + "'");
  doc.language = *lang;

  if (auto dialect = optional_string(j, "dialect")) {
    auto d = parse_dialect(*dialect);
    if (!d) throw InvariantViolation("dialect", "unknown dialect '" + *dialect + "'");
    doc.dialect = *d;
  }

  const std::string category = require_string(j, "category");
  auto cat = parse_category(category);
  if (!cat) throw InvariantViolation("category", "unknown category '" + category + "'");
  doc.category = *cat;

  doc.source = optional_string(j, "source").value_or("");
  doc.token_count = tokenizer.count(doc.text);
  if (auto it = j.find("token_count"); it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
      throw InvariantViolation("token_count", "expected a non-negative integer");
    }
    if (it->get<std::uint64_t>() != doc.token_count) {
      throw InvariantViolation("token_count", "recorded " + std::to_string(it->get<std::uint64_t>()) +
                                                  " but the tokenizer counts " + std::to_string(doc.token_count));
    }
  }
  doc.extra = collect_extra(j, document_fields());
  validate(doc);
  return doc;
}

BenchmarkItem benchmark_from_json(const json& j) {
  if (!j.is_object()) throw InvariantViolation("<record>", "expected a JSON object");
  BenchmarkItem item;
  const std::string suite = require_string(j, "suite");
  auto s = parse_suite(suite);
  if (!s) throw InvariantViolation("suite", "unknown suite '" + suite + "'");
  item.suite = *s;
  item.task_id = require_string(j, "task_id");
  item.question = require_string(j, "question");

  const json& options = require(j, "options");
  if (!options.is_array()) throw InvariantViolation("options", "expected an array of strings");
  for (const auto& o : options) {
    if (!o.is_string()) throw InvariantViolation("options", "expected an array of strings");
    item.options.push_back(o.get<std::string>());
  }

  const json& gold = require(j, "gold_index");
  if (!gold.is_number_integer()) throw InvariantViolation("gold_index", "expected an integer");
  const auto g = gold.get<std::int64_t>();
  if (g < 0 || g > static_cast<std::int64_t>(kMaxOptions)) {
    throw InvariantViolation("gold_index", "out of range (got " + std::to_string(g) + ")");
  }
  item.gold_index = static_cast<int>(g);
  item.context = optional_string(j, "context");
  item.extra = collect_extra(j, benchmark_fields());
  validate(item);
  return item;
}

template <typename Record>
void JsonlReader<Record>::reject(std::size_t position, std::string field, const std::string& message) {
  if (options_.on_invalid == OnInvalid::Abort) throw IngestError(line_, position, std::move(field), message);
  diagnostics_.push_back({line_, position, std::move(field), message});
}

namespace {

Document decode_record(const json& j, const IngestOptions& options, std::unordered_set<std::string>& seen_ids,
                       std::type_identity<Document>) {
  Document doc = document_from_json(j, options.tokenizer ? *options.tokenizer : default_tokenizer());
  if (!seen_ids.insert(doc.id).second) throw InvariantViolation("id", "duplicate id '" + doc.id + "'");
  return doc;
}

BenchmarkItem decode_record(const json& j, const IngestOptions&, std::unordered_set<std::string>&,
                            std::type_identity<BenchmarkItem>) {
  return benchmark_from_json(j);
}

}  // namespace

template <typename Record>
Record JsonlReader<Record>::parse_line(const json& j) {
  return decode_record(j, options_, seen_ids_, std::type_identity<Record>{});
}

template <typename Record>
std::optional<Record> JsonlReader<Record>::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      reject(e.byte, "", std::string("malformed JSON: ") + e.what());
      continue;
    }
    try {
      return parse_line(j);
    } catch (const InvariantViolation& e) {
      reject(0, e.field(), e.what());
    }
  }
  return std::nullopt;
}

template class JsonlReader<Document>;
template class JsonlReader<BenchmarkItem>;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing_input", "cannot open input file '" + path.string() + "'");
  return in;
}

}  // namespace

Ingested ingest(const std::filesystem::path& path, Schema schema, const IngestOptions& options) {
  std::ifstream in = open_input(path);
  Ingested out;
  if (schema == Schema::Document) {
    DocumentReader reader(in, options);
    while (auto doc = reader.next()) out.documents.push_back(std::move(*doc));
    out.diagnostics = reader.diagnostics();
  } else {
    BenchmarkReader reader(in, options);
    while (auto item = reader.next()) out.items.push_back(std::move(*item));
    out.diagnostics = reader.diagnostics();
  }
  return out;
}

std::vector<Document> read_documents(const std::filesystem::path& path, const IngestOptions& options) {
  return ingest(path, Schema::Document, options).documents;
}

std::vector<BenchmarkItem> read_benchmark(const std::filesystem::path& path, const IngestOptions& options) {
  return ingest(path, Schema::Benchmark, options).items;
}

void write_jsonl(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) out << to_json(d).dump() << '\n';
}

void write_jsonl(std::ostream& out, const std::vector<BenchmarkItem>& items) {
  for (const auto& i : items) out << to_json(i).dump() << '\n';
}

std::vector<json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw IngestError(n, e.byte, "", std::string("malformed JSON in '") + path.string() + "': " + e.what());
    }
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IngestError(0, e.byte, "", "malformed JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace qalam
