#pragma once

#include <functional>

#include <CLI11.hpp>

#include "context.hpp"

namespace qalam::cli {

// Subcommand callbacks store the work here; main runs it inside the error handler.
using Action = std::function<void()>;

void add_corpus_commands(CLI::App& app, const GlobalOptions& global, Action& action);
void add_cot_commands(CLI::App& app, const GlobalOptions& global, Action& action);
void add_eval_commands(CLI::App& app, const GlobalOptions& global, Action& action);

}  // namespace qalam::cli
