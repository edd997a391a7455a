#pragma once

// Numerical solvers for the M^[X]/M/C queue and M/M/C closed forms used as
// references for them.

#include <vector>

#include "cran/model.hpp"

namespace cran::analytic {

/// Erlang-C probability that an arrival waits, offered load `erlangs` = lambda/mu.
double erlang_c(int cores, double erlangs);

/// M/M/C sojourn survival P(T > t), single-job arrivals.
double mmc_sojourn_tail(int cores, double lambda, double mu, double t);

/// M/M/1-PS mean sojourn 1/(mu - lambda).
double ps_mean_sojourn(double lambda, double mu);

struct StationaryDistribution {
  std::vector<double> probs;  // index = jobs in system
  int truncation = 0;
  double tail_mass_bound = 0.0;  // mass on states > 0.9 * truncation

  double mean() const;
};

inline constexpr double kTailMassLimit = 1e-8;

/// Stationary law of the jobs-in-system chain truncated at `n_trunc` (arrivals
/// overshooting the cap land on it). Throws TruncationError when the mass
/// near the cap is not below kTailMassLimit.
StationaryDistribution mxmc_stationary(const WorkloadSpec& w, int cores, int n_trunc);

/// Same, with the truncation chosen automatically: start at
/// max(10 C, 50 E[B] / (1 - rho)) and double until the tail bound holds.
StationaryDistribution mxmc_stationary(const WorkloadSpec& w, int cores);

enum class TailMethod { PhaseType, MonteCarlo };

struct SojournTail {
  std::vector<double> grid;      // ms
  std::vector<double> survival;  // P(T > t)
  TailMethod method = TailMethod::PhaseType;
};

enum class KernelMode { Serial, Parallel };

struct TailOptions {
  double poisson_eps = 1e-9;     // neglected Poisson mass in uniformization
  double batch_tail_eps = 1e-12; // neglected batch-size mass
  int n_trunc = 0;               // 0 = automatic
  KernelMode kernel = KernelMode::Parallel;
};

/// Survival of the sojourn time of a tagged batch (arrival until its last
/// job completes) under greedy FCFS, via an absorbing chain solved by
/// uniformization and mixed over the stationary state seen on arrival and the
/// batch size.
SojournTail batch_sojourn_tail(const WorkloadSpec& w, int cores, const std::vector<double>& grid,
                               const TailOptions& opts = {});

}  // namespace cran::analytic
