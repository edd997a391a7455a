#pragma once

// Domain types of the batch-arrival multi-core model.
//
// Time is in milliseconds everywhere; every rate is per millisecond.

#include <cstdint>
#include <map>
#include <random>
#include <variant>
#include <vector>

#include "cran/errors.hpp"

namespace cran {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Batch-size law
// ---------------------------------------------------------------------------

struct Geometric {
  double q;  // P(B = k) = (1 - q) q^(k-1), k >= 1
};

struct Deterministic {
  int k;
};

struct Empirical {
  std::map<int, double> pmf;
};

class BatchLaw {
 public:
  static BatchLaw geometric(double q);
  static BatchLaw deterministic(int k);
  static BatchLaw empirical(std::map<int, double> pmf);

  const std::variant<Geometric, Deterministic, Empirical>& kind() const { return kind_; }
  bool is_geometric() const { return std::holds_alternative<Geometric>(kind_); }

  double mean() const;
  double pmf(int k) const;
  /// P(B >= k).
  double at_least(int k) const;
  int sample(Rng& rng) const;

  /// Probabilities P(B = k) for k = 0..b_max (index 0 is always 0). Infinite
  /// supports are cut where the neglected mass drops below `tail_eps` and the
  /// result is renormalized.
  std::vector<double> truncated_pmf(double tail_eps = 1e-12) const;

 private:
  explicit BatchLaw(std::variant<Geometric, Deterministic, Empirical> k) : kind_(std::move(k)) {}
  std::variant<Geometric, Deterministic, Empirical> kind_;
};

// ---------------------------------------------------------------------------
// Workload and system
// ---------------------------------------------------------------------------

struct WorkloadSpec {
  WorkloadSpec(double arrival_rate, BatchLaw batch, double service_rate);

  double arrival_rate;  // lambda, batches per ms
  BatchLaw batch;
  double service_rate;  // mu, job completions per ms per core
};

struct GreedyFcfs {};
struct ProcessorSharing {};
struct Dedicated {
  std::vector<int> partition;
};
using Discipline = std::variant<GreedyFcfs, ProcessorSharing, Dedicated>;

struct NoImpatience {};
struct BatchDeadline {
  double deadline_ms;
};
using Impatience = std::variant<NoImpatience, BatchDeadline>;

struct SystemSpec {
  explicit SystemSpec(int cores, Discipline discipline = GreedyFcfs{},
                      Impatience impatience = NoImpatience{});

  int cores;
  Discipline discipline;
  Impatience impatience;
};

struct LatencyTarget {
  LatencyTarget(double deadline_ms, double tolerance);

  double deadline_ms;  // delta
  double tolerance;    // epsilon
};

// ---------------------------------------------------------------------------
// Radio workload
// ---------------------------------------------------------------------------

/// Transport-block size law, bits per UE.
struct FixedBits {
  std::int64_t bits;
};
struct UniformBits {
  std::int64_t lo, hi;  // inclusive
};
struct EmpiricalBits {
  std::map<std::int64_t, double> pmf;
};
using TbSizeLaw = std::variant<FixedBits, UniformBits, EmpiricalBits>;

enum class Parallelism { Subframe, PerUE, PerCB };

enum class ServiceNoise { Exponential, Deterministic };

struct RadioWorkload {
  int n_cells = 1;
  double tti_ms = 1.0;
  BatchLaw ue_law = BatchLaw::deterministic(1);
  TbSizeLaw tb_bits_law = FixedBits{6144};
  int cb_max_bits = 6144;
  Parallelism parallelism = Parallelism::PerCB;

  // bits -> processing time: overhead + bits / decode_rate, scaled by noise
  double decode_rate_bits_per_ms = 1e5;
  double per_job_overhead_ms = 0.0;
  ServiceNoise noise = ServiceNoise::Exponential;

  /// Throws ValidationError on a broken invariant.
  void validate() const;
  double mean_tb_bits() const;
};

/// Number of code blocks a transport block of `bits` is segmented into.
std::int64_t code_block_count(std::int64_t bits, int cb_max_bits);

/// Per-UE transport-block sizes of one subframe.
std::vector<std::int64_t> sample_subframe(const RadioWorkload& r, Rng& rng);

/// Split transport blocks into parallel jobs (bits per job). Total bits are
/// conserved for every mode.
std::vector<std::int64_t> decompose(const std::vector<std::int64_t>& tb_bits, Parallelism mode,
                                    int cb_max_bits);

std::vector<std::int64_t> decompose_subframe(const RadioWorkload& r, Rng& rng);

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

struct OfferedLoad {
  double rho;
  bool stable;
};

/// rho = lambda E[B] / (mu C).
OfferedLoad offered_load(const WorkloadSpec& w, int cores);

/// Mean processing time of a whole geometric batch, 1 / ((1 - q) mu).
double subframe_service_mean(const WorkloadSpec& w);

}  // namespace cran
