#pragma once

// Smallest core count whose batch deadline-exceedance probability is below
// a tolerance.

#include <optional>
#include <vector>

#include "cran/analytic.hpp"
#include "cran/model.hpp"
#include "cran/simulate.hpp"

namespace cran::dimension {

enum class Backend { Analytic, Simulation };

struct CurvePoint {
  int cores = 0;
  double exceedance = 0.0;
  double ci_half_width = 0.0;  // 0 for the analytic backend
  bool stable = true;
};

struct DimensioningResult {
  int c_required = 0;
  int c_stability = 0;
  std::vector<CurvePoint> curve;  // strictly increasing in cores
  Backend backend = Backend::Analytic;
  LatencyTarget target{1.0, 0.5};
};

struct SearchOptions {
  Backend backend = Backend::Analytic;
  int c_max = 0;  // 0: 4 * C_s
  /// Horizon, warmup, seed and replications for the simulation backend; its
  /// workload and system are replaced per core count.
  std::optional<sim::SimConfig> sim_template;
  /// Exponential steps then bisection instead of a linear scan.
  bool accelerate = false;
  analytic::KernelMode kernel = analytic::KernelMode::Parallel;
};

/// C_s = floor(lambda E[B] / mu) + 1.
int min_stable_cores(const WorkloadSpec& w);

/// P(T > deadline) at one core count. Unstable core counts report 1 under
/// the analytic backend (the stationary limit) and are simulated otherwise.
CurvePoint exceedance_at(const WorkloadSpec& w, int cores, double deadline_ms, const SearchOptions& opts);

/// Exceedance for every core count in [c_from, c_to]. Points are evaluated
/// concurrently; exceedance_curve_serial is the sequential reference.
std::vector<CurvePoint> exceedance_curve(const WorkloadSpec& w, double deadline_ms, int c_from, int c_to,
                                         const SearchOptions& opts);
std::vector<CurvePoint> exceedance_curve_serial(const WorkloadSpec& w, double deadline_ms, int c_from, int c_to,
                                                const SearchOptions& opts);

/// First C >= C_s with P(T > delta) < epsilon. The simulation backend
/// requires the 95% upper confidence bound to be below epsilon.
DimensioningResult required_cores(const WorkloadSpec& w, const LatencyTarget& target, const SearchOptions& opts);

}  // namespace cran::dimension
