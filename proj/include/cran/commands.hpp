#pragma once

// Subcommands of the `cran` tool. Each reads an experiment config, applies
// command-line overrides to it, and writes its results into the output
// directory.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cran/config.hpp"

namespace cran::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kInstability = 3,
  kTruncation = 4,
  kNotFound = 5,
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::optional<std::string> format;   // json | csv | text
  std::optional<std::string> out_dir;
  std::optional<std::string> backend;  // analytic | sim
};

/// Folds the overrides into the raw config so they count toward its hash.
void apply_overrides(Json& raw, const Overrides& o);

std::vector<std::string> cmd_analyze(const ExperimentConfig& cfg);
std::vector<std::string> cmd_simulate(const ExperimentConfig& cfg);
std::vector<std::string> cmd_dimension(const ExperimentConfig& cfg);
std::vector<std::string> cmd_fronthaul(const ExperimentConfig& cfg);
std::vector<std::string> cmd_sweep(const ExperimentConfig& cfg);

/// Loads the config, runs `command`, lists written files on `out` and
/// reports failures on `err` as one JSON line. Returns the exit code.
int run_command(const std::string& command, const std::string& config_path, const Overrides& overrides,
                std::ostream& out, std::ostream& err);

}  // namespace cran::cli
