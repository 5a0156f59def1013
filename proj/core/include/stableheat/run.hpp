#pragma once

#include <filesystem>
#include <string>

#include "stableheat/config.hpp"
#include "stableheat/report.hpp"

namespace stableheat {

struct RunResult {
  json report;
  std::filesystem::path out_dir;
};

/// Executes one subcommand pipeline (operator-info, kernel-verify,
/// lemma-check, simulate, oracle, sweep) and writes report.json, CSV tables
/// and summary.txt into cfg.out_dir. Throws Error subclasses; the CLI maps
/// them to exit codes 2 (validation), 3 (numerical/IO), 4 (assumption).
RunResult run_config(const RunConfig& cfg, const std::string& subcommand);

}  // namespace stableheat
