#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qalam::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  bool dry_run = false;
  std::string out_dir = "qalam-out";
};

// Per-invocation state shared by every subcommand: the loaded config file,
// effective parameters, and the inputs/outputs recorded in the manifest.
class Context {
 public:
  Context(std::string subcommand, const GlobalOptions& global);

  const std::string& subcommand() const { return subcommand_; }
  std::uint64_t seed() const { return seed_; }
  unsigned jobs() const { return global_.jobs; }
  bool dry_run() const { return global_.dry_run; }
  const fs::path& out_dir() const { return out_; }

  // Config section for this subcommand ("{}" when absent).
  const json& section(const std::string& name) const;
  const json& config() const { return config_; }

  // Records an effective parameter block; everything recorded feeds the digest.
  void set_effective(const std::string& key, json value);
  std::string config_digest() const;

  // Registers an input file (hashed into the manifest) and returns its path.
  fs::path input(const std::string& path);

  // Writers create the output directory on first use and refuse to run in
  // dry-run mode.
  void write_text(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const json& value);
  void write_jsonl(const std::string& name, const std::vector<json>& rows);
  // For files written incrementally: returns the path, and record_output()
  // hashes the finished file into the manifest.
  fs::path output_path(const std::string& name);
  void record_output(const std::string& name);

  // Writes <subcommand>.report.json/.txt and echoes the text table to stdout.
  void report(const json& data, const std::string& table);
  // Writes <subcommand>.manifest.json. Call last.
  void finish(json extra = json::object());

 private:
  std::string subcommand_;
  GlobalOptions global_;
  json config_ = json::object();
  std::uint64_t seed_ = 0;
  fs::path out_;
  json effective_ = json::object();
  json inputs_ = json::array();
  json outputs_ = json::array();
};

// Left-aligned first column, right-aligned remaining columns.
std::string render_table(const std::vector<std::string>& headers, const std::vector<std::vector<std::string>>& rows);

std::string sha256_file(const fs::path& path);

}  // namespace qalam::cli
