#include <iostream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "qalam/error.hpp"
#include "qalam/version.hpp"

namespace {

int fail(const std::string& code, const std::string& message) {
  std::cerr << "error: code=" << code << " message=" << nlohmann::json(message).dump() << "\n";
  return code == "usage" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qalam::cli;

  CLI::App app{"Corpus curation, CoT distillation and evaluation pipeline", qalam::kToolName};
  app.set_version_flag("--version", std::string(qalam::kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config_path, "JSON config file");
  app.add_option("--seed", global.seed, "Top-level seed (overrides the config)");
  app.add_option("--jobs", global.jobs, "Worker parallelism")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", global.dry_run, "Validate inputs and config; write nothing");
  app.add_option("--out", global.out_dir, "Output directory")->capture_default_str();

  Action action;
  add_corpus_commands(app, global, action);
  add_cot_commands(app, global, action);
  add_eval_commands(app, global, action);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    const auto extra = app.remaining();
    if (!extra.empty() && !extra.front().starts_with("-")) {
      return fail("usage", "unknown subcommand '" + extra.front() + "'");
    }
    return fail("usage", e.what());
  }

  try {
    if (action) action();
    return 0;
  } catch (const qalam::Error& e) {
    return fail(e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail("invalid_json", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
}
