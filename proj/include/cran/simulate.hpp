#pragma once

// Seeded discrete-event simulation of batch job processing on a multi-core
// pool under greedy FCFS, processor sharing or dedicated partitions, with
// optional batch-level reneging at a deadline.

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "cran/analytic.hpp"
#include "cran/model.hpp"

namespace cran::sim {

/// How radio cells emit subframes: a per-cell TTI clock with a random phase,
/// or an aggregate Poisson stream of the same rate.
enum class RadioArrivals { TtiClock, Poisson };

struct SimConfig {
  std::variant<WorkloadSpec, RadioWorkload> workload;
  SystemSpec system;
  double horizon_ms = 1e4;
  std::optional<double> warmup_ms;  // unset: 10% of the horizon
  std::uint64_t seed = 1;
  int replications = 1;
  RadioArrivals radio_arrivals = RadioArrivals::TtiClock;

  double warmup() const { return warmup_ms.value_or(0.1 * horizon_ms); }
  void validate() const;
};

struct BatchRecord {
  double arrival_ms;
  double sojourn_ms;  // for reneged batches: time until cancellation
  bool reneged;
};

struct Interval {
  double value = 0.0;
  double half_width = 0.0;  // 95%
  double std_error = 0.0;
};

/// Number of consecutive groups used for batch-means intervals in one run.
inline constexpr int kBatchMeansGroups = 20;

struct SimMetrics {
  std::vector<BatchRecord> batches;  // observed batches, in arrival order
  std::size_t batches_observed = 0;
  double reneged_fraction = 0.0;
  double core_utilization = 0.0;
  double offered_load = 0.0;  // rho of the configuration (radio: measured from generated work)
  bool unstable = false;

  // audits and time averages over [warmup, horizon)
  double window_ms = 0.0;
  double mean_jobs_in_system = 0.0;
  double job_arrival_rate = 0.0;  // observed jobs per ms
  double mean_job_sojourn = 0.0;
  std::vector<double> occupancy;  // time fraction with n jobs in system
  std::uint64_t work_conservation_violations = 0;
  double ps_fairness_max_error = 0.0;  // ms of work

  /// P(T > x); reneged batches count as exceeding every x.
  Interval exceedance(double x) const;
  Interval mean_sojourn() const;
  /// Empirical quantile; +inf if it falls among reneged batches.
  double quantile(double p) const;
  double p99() const { return quantile(0.99); }
  /// (t, F(t)) at most `max_points` pairs, nondecreasing. Plateaus at
  /// 1 - reneged_fraction when batches reneged.
  std::vector<std::pair<double, double>> empirical_cdf(std::size_t max_points = 512) const;
  analytic::SojournTail tail(const std::vector<double>& grid) const;
};

/// One replication seeded with `config.seed`.
SimMetrics run(const SimConfig& config);

struct ModeMetrics {
  Parallelism mode;
  SimMetrics metrics;
};

/// Radio workload under each parallelism granularity; the subframe content
/// and arrival phases are shared across modes.
std::vector<ModeMetrics> run_radio(const SimConfig& config);

/// As run(), but requires a BatchDeadline impatience policy.
SimMetrics run_impatient(const SimConfig& config);

/// Seed of replication `index`: splitmix64(base + index * golden gamma).
std::uint64_t replication_seed(std::uint64_t base, int index);

struct ReplicatedMetrics {
  std::vector<SimMetrics> runs;

  Interval exceedance(double x) const;
  Interval p99() const;
  Interval mean_sojourn() const;
  Interval reneged_fraction() const;
  Interval core_utilization() const;
};

/// Independent replications, each a full run. The parallel version spreads
/// replications over OpenMP threads; results are identical to the serial one.
ReplicatedMetrics replicate(const SimConfig& config);
ReplicatedMetrics replicate_serial(const SimConfig& config);

}  // namespace cran::sim
