#include "context.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qalam/error.hpp"
#include "qalam/hash.hpp"
#include "qalam/jsonl.hpp"
#include "qalam/normalize.hpp"
#include "qalam/tokenizer.hpp"
#include "qalam/version.hpp"

namespace qalam::cli {

namespace {

std::string file_stem(std::string s) {
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

// Display width in code points; good enough for aligned columns.
std::size_t width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

Context::Context(std::string subcommand, const GlobalOptions& global)
    : subcommand_(std::move(subcommand)), global_(global), out_(global.out_dir) {
  if (!global_.config_path.empty()) {
    config_ = read_json_file(input(global_.config_path));
    if (!config_.is_object()) throw Error("invalid_config", "config file must hold a JSON object");
  }
  if (global_.jobs == 0) throw Error("invalid_config", "--jobs must be at least 1");
  seed_ = global_.seed ? *global_.seed : config_.value("seed", std::uint64_t{0});
}

const json& Context::section(const std::string& name) const {
  static const json kEmpty = json::object();
  const auto it = config_.find(name);
  if (it == config_.end()) return kEmpty;
  if (!it->is_object()) throw Error("invalid_config", "config section '" + name + "' must be an object");
  return *it;
}

void Context::set_effective(const std::string& key, json value) { effective_[key] = std::move(value); }

std::string Context::config_digest() const {
  json basis = effective_;
  basis["seed"] = seed_;
  basis["subcommand"] = subcommand_;
  return sha256_hex(basis.dump());
}

fs::path Context::input(const std::string& path) {
  const fs::path p(path);
  if (!fs::is_regular_file(p)) throw Error("missing_input", "input file not found: " + path);
  inputs_.push_back({{"name", p.filename().string()}, {"sha256", sha256_file(p)}});
  return p;
}

void Context::write_text(const std::string& name, const std::string& content) {
  if (dry_run()) throw Error("internal", "attempted write in dry-run mode");
  fs::create_directories(out_);
  const fs::path p = out_ / name;
  {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("io_error", "cannot write " + p.string());
    f << content;
  }
  outputs_.push_back({{"name", name}, {"sha256", sha256_hex(content)}});
}

void Context::write_json(const std::string& name, const json& value) { write_text(name, value.dump(2) + "\n"); }

void Context::write_jsonl(const std::string& name, const std::vector<json>& rows) {
  std::string content;
  for (const auto& r : rows) content += r.dump() + "\n";
  write_text(name, content);
}

fs::path Context::output_path(const std::string& name) {
  if (dry_run()) throw Error("internal", "attempted write in dry-run mode");
  fs::create_directories(out_);
  return out_ / name;
}

void Context::record_output(const std::string& name) {
  outputs_.push_back({{"name", name}, {"sha256", sha256_file(out_ / name)}});
}

void Context::report(const json& data, const std::string& table) {
  std::cout << table;
  if (dry_run()) return;
  write_json(file_stem(subcommand_) + ".report.json", data);
  write_text(file_stem(subcommand_) + ".report.txt", table);
}

void Context::finish(json extra) {
  if (dry_run()) {
    std::cout << "dry run: inputs and config valid, nothing written\n";
    return;
  }
  json m = std::move(extra);
  m["tool"] = kToolName;
  m["tool_version"] = kToolVersion;
  m["subcommand"] = subcommand_;
  m["seed"] = seed_;
  m["config"] = effective_;
  m["config_digest"] = config_digest();
  m["normalization_version"] = kNormalizationVersion;
  m["tokenizer"] = default_tokenizer().name();
  m["inputs"] = inputs_;
  m["outputs"] = outputs_;
  const std::string name = file_stem(subcommand_) + ".manifest.json";
  fs::create_directories(out_);
  std::ofstream f(out_ / name, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("io_error", "cannot write " + (out_ / name).string());
  f << m.dump(2) << "\n";
}

std::string render_table(const std::vector<std::string>& headers, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) w[c] = width(headers[c]);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size() && c < w.size(); ++c) w[c] = std::max(w[c], width(r[c]));
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < w.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      const std::string pad(w[c] - width(cell), ' ');
      if (c) os << "  ";
      if (c == 0) {
        os << cell << (w.size() > 1 ? pad : "");
      } else {
        os << pad << cell;
      }
    }
    os << "\n";
  };
  line(headers);
  std::vector<std::string> rule;
  for (std::size_t c = 0; c < w.size(); ++c) rule.emplace_back(w[c], '-');
  line(rule);
  for (const auto& r : rows) line(r);
  return os.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("missing_input", "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return sha256_hex(ss.str());
}

}  // namespace qalam::cli
