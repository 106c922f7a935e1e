#pragma once

#include "homog/runner/config.hpp"
#include "homog/util/csv.hpp"

#include <json.hpp>

#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace homog {

/// Process exit codes (stable contract).
enum ExitCode : int {
  kExitOk = 0,
  kExitCriterion = 1,  // verify: a gating criterion failed
  kExitConfig = 2,
  kExitBudget = 3,
  kExitNumerical = 4,
};

/// Maps library exceptions to exit codes: InvalidInput -> 2, BudgetError -> 3,
/// everything else -> 4.
int exit_code_for(const std::exception& e) noexcept;

/// "<version>+<git sha>".
std::string code_version();

/// Writes through a temporary file in the same directory and renames.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct RunOutcome {
  nlohmann::json manifest;
  int exit_code = kExitOk;
};

/// Dispatches to the module, writes the outputs and then manifest.json into
/// out_dir. Library errors propagate as exceptions (nothing is written for
/// the manifest then); results that fail their own validity checks are
/// written, flagged in the manifest and reported as kExitNumerical, or
/// kExitCriterion for a failing verify run. `progress` receives one line per
/// finished verify criterion.
RunOutcome run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                          const std::function<void(const std::string&)>& progress = {});

/// Merges the outputs listed by each manifest into one long table with
/// columns model_hash, command, param_hash, table, row, column, value.
/// CSV rows are keyed by their index, JSON leaves by their pointer. Exact
/// duplicates collapse; conflicting values for one key throw InvalidInput
/// listing every conflict. Also fills `parameters` (param_hash -> tuple) and
/// `models` (model_hash -> model) when given.
CsvTable emit_report(const std::vector<std::filesystem::path>& manifests, nlohmann::json* index = nullptr);

}  // namespace homog
