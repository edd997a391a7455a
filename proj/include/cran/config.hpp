#pragma once

// JSON experiment configuration: schema validation and conversion to the
// typed model. Unknown keys are rejected.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cran/dimension.hpp"
#include "cran/fronthaul.hpp"
#include "cran/model.hpp"
#include "cran/simulate.hpp"

namespace cran::cli {

using Json = nlohmann::json;

/// Config file unreadable or not valid JSON; carries a line/column.
struct ConfigError : ValidationError {
  using ValidationError::ValidationError;
};

enum class OutputFormat { Json, Csv, Text };

struct SimSettings {
  double horizon_ms = 1e4;
  std::optional<double> warmup_ms;
  int replications = 1;
  std::uint64_t seed = 1;
  bool samples_csv = false;
};

struct AnalysisSettings {
  std::vector<double> grid;  // ms
  int truncation = 0;        // 0 = automatic
};

struct DimensionSettings {
  dimension::Backend backend = dimension::Backend::Analytic;
  int c_max = 0;
  bool accelerate = false;
  int curve_from = 0;  // 0: max(1, C_s - 5)
  int curve_to = 0;    // extend the recorded curve over [curve_from, curve_to]
};

struct SweepSettings {
  std::string parameter;  // dotted path, e.g. "system.cores"
  std::vector<double> values;
};

struct ExperimentConfig {
  Json raw;  // effective config after command-line overrides

  std::optional<WorkloadSpec> workload;
  std::optional<RadioWorkload> radio;
  bool radio_all_modes = false;
  sim::RadioArrivals radio_arrivals = sim::RadioArrivals::TtiClock;
  std::optional<SystemSpec> system;
  std::optional<LatencyTarget> target;
  SimSettings simulation;
  AnalysisSettings analysis;
  DimensionSettings dimension;
  fronthaul::FronthaulSpec fronthaul;
  int fronthaul_cells = 1;
  std::optional<double> fronthaul_budget_ms;  // one-way latency budget for the distance row
  std::optional<SweepSettings> sweep;
  std::optional<OutputFormat> format;  // unset: the command's natural format
  std::string out_dir = ".";
};

Json load_json_file(const std::string& path);
Json parse_json_text(const std::string& text);

ExperimentConfig parse_config(const Json& raw);

/// 64-bit FNV-1a of the canonical (sorted-key) dump, as 16 hex digits. The
/// output directory is not part of the hash.
std::string config_hash(const Json& raw);

/// Numeric value at a dotted path, or nullopt when absent or not a number.
std::optional<double> numeric_at(const Json& raw, const std::string& dotted);
void set_numeric_at(Json& raw, const std::string& dotted, double value);

}  // namespace cran::cli
