#include "cran/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <variant>

#include "cran/kernels.hpp"

namespace cran::analytic {

namespace {

void require_stable(double rho, const char* what) {
  if (!(rho < 1.0)) {
    throw InstabilityError(std::string(what) + ": offered load rho = " + std::to_string(rho) + " >= 1");
  }
}

constexpr int kMaxTruncation = 1 << 24;

// Unnormalized stationary weights via cut flows: for every n < N,
//   lambda * sum_{i<=n} pi_i P(B >= n+1-i) = min(n+1, C) mu pi_{n+1}.
std::vector<double> cut_flow_weights(const WorkloadSpec& w, int cores, int n_trunc) {
  std::vector<double> pi(static_cast<std::size_t>(n_trunc) + 1, 0.0);
  pi[0] = 1.0;
  const double lambda = w.arrival_rate, mu = w.service_rate;
  constexpr double kRescale = 1e200;

  if (const auto* g = std::get_if<Geometric>(&w.batch.kind())) {
    // sum_{i<=n} pi_i q^(n-i) obeys F(n) = q F(n-1) + pi_n
    double flow = 0.0;
    for (int n = 0; n < n_trunc; ++n) {
      flow = g->q * flow + pi[n];
      pi[n + 1] = lambda * flow / (std::min(n + 1, cores) * mu);
      if (pi[n + 1] > kRescale) {
        for (int i = 0; i <= n + 1; ++i) pi[i] /= kRescale;
        flow /= kRescale;
      }
    }
    return pi;
  }

  // finite support: P(B >= j) vanishes beyond the largest batch size
  const std::vector<double> pmf = w.batch.truncated_pmf();
  const int k_max = static_cast<int>(pmf.size()) - 1;
  std::vector<double> at_least(k_max + 2, 0.0);
  for (int j = k_max; j >= 1; --j) at_least[j] = at_least[j + 1] + pmf[j];
  for (int n = 0; n < n_trunc; ++n) {
    double flow = 0.0;
    const int j_hi = std::min(k_max, n + 1);
    for (int j = 1; j <= j_hi; ++j) flow += pi[n + 1 - j] * at_least[j];
    pi[n + 1] = lambda * flow / (std::min(n + 1, cores) * mu);
    if (pi[n + 1] > kRescale) {
      for (int i = 0; i <= n + 1; ++i) pi[i] /= kRescale;
    }
  }
  return pi;
}

StationaryDistribution solve_truncated(const WorkloadSpec& w, int cores, int n_trunc) {
  StationaryDistribution s;
  s.truncation = n_trunc;
  s.probs = cut_flow_weights(w, cores, n_trunc);
  const double total = std::accumulate(s.probs.begin(), s.probs.end(), 0.0);
  for (double& p : s.probs) p /= total;
  const auto cut = static_cast<std::size_t>(std::floor(0.9 * n_trunc)) + 1;
  for (std::size_t n = cut; n < s.probs.size(); ++n) s.tail_mass_bound += s.probs[n];
  return s;
}

double log_poisson(int k, double x) { return k * std::log(x) - x - std::lgamma(k + 1.0); }

}  // namespace

double erlang_c(int cores, double erlangs) {
  if (cores < 1) throw ValidationError("erlang_c: cores must be >= 1");
  if (!(erlangs >= 0.0)) throw ValidationError("erlang_c: offered load must be >= 0");
  if (erlangs >= cores) throw InstabilityError("erlang_c: offered erlangs >= cores");
  if (erlangs == 0.0) return 0.0;
  // Erlang-B recursion, then the B -> C conversion
  double b = 1.0;
  for (int k = 1; k <= cores; ++k) b = erlangs * b / (k + erlangs * b);
  return cores * b / (cores - erlangs * (1.0 - b));
}

double mmc_sojourn_tail(int cores, double lambda, double mu, double t) {
  if (!(lambda > 0.0 && mu > 0.0)) throw ValidationError("mmc_sojourn_tail: rates must be > 0");
  if (t < 0.0) throw ValidationError("mmc_sojourn_tail: t must be >= 0");
  require_stable(lambda / (cores * mu), "mmc_sojourn_tail");
  const double wait_prob = erlang_c(cores, lambda / mu);
  const double gamma = cores * mu - lambda;  // waiting-time decay rate
  const double d = gamma - mu;
  // P(Exp(gamma) + Exp(mu) > t) = e^{-mu t} [1 + mu (1 - e^{-d t}) / d], limit d -> 0 gives 1 + mu t
  const double ratio = std::abs(d * t) < 1e-12 ? t : -std::expm1(-d * t) / d;
  const double hypo = std::exp(-mu * t) * (1.0 + mu * ratio);
  return (1.0 - wait_prob) * std::exp(-mu * t) + wait_prob * hypo;
}

double ps_mean_sojourn(double lambda, double mu) {
  if (!(lambda >= 0.0 && mu > 0.0)) throw ValidationError("ps_mean_sojourn: bad rates");
  require_stable(lambda / mu, "ps_mean_sojourn");
  return 1.0 / (mu - lambda);
}

double StationaryDistribution::mean() const {
  double m = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) m += static_cast<double>(n) * probs[n];
  return m;
}

StationaryDistribution mxmc_stationary(const WorkloadSpec& w, int cores, int n_trunc) {
  require_stable(offered_load(w, cores).rho, "mxmc_stationary");
  if (n_trunc < 10 * cores) throw ValidationError("mxmc_stationary: truncation must be >= 10 C");
  StationaryDistribution s = solve_truncated(w, cores, n_trunc);
  if (!(s.tail_mass_bound < kTailMassLimit)) {
    throw TruncationError("mxmc_stationary: tail mass " + std::to_string(s.tail_mass_bound) +
                          " at truncation " + std::to_string(n_trunc));
  }
  return s;
}

StationaryDistribution mxmc_stationary(const WorkloadSpec& w, int cores) {
  const double rho = offered_load(w, cores).rho;
  require_stable(rho, "mxmc_stationary");
  const double start = std::max(10.0 * cores, std::ceil(50.0 * w.batch.mean() / (1.0 - rho)));
  if (start > kMaxTruncation) throw TruncationError("mxmc_stationary: load too close to 1");
  for (int n = static_cast<int>(start);; n *= 2) {
    StationaryDistribution s = solve_truncated(w, cores, n);
    if (s.tail_mass_bound < kTailMassLimit) return s;
    if (n > kMaxTruncation / 2) break;
  }
  throw TruncationError("mxmc_stationary: truncation limit reached before tail bound held");
}

SojournTail batch_sojourn_tail(const WorkloadSpec& w, int cores, const std::vector<double>& grid,
                               const TailOptions& opts) {
  require_stable(offered_load(w, cores).rho, "batch_sojourn_tail");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw ValidationError("batch_sojourn_tail: grid times must be >= 0");
    if (i > 0 && grid[i] < grid[i - 1]) throw ValidationError("batch_sojourn_tail: grid must be sorted");
  }

  const StationaryDistribution st =
      opts.n_trunc > 0 ? mxmc_stationary(w, cores, opts.n_trunc) : mxmc_stationary(w, cores);
  const std::vector<double>& pi = st.probs;
  const int n_max = static_cast<int>(pi.size()) - 1;
  const std::vector<double> pb = w.batch.truncated_pmf(opts.batch_tail_eps);
  const int b_max = static_cast<int>(pb.size()) - 1;

  // waiting[k] = mass that arrived seeing n >= C + k jobs: still queued after k steps
  std::vector<double> waiting(static_cast<std::size_t>(std::max(0, n_max - cores + 1)) + 1, 0.0);
  for (int n = n_max; n >= cores; --n) waiting[n - cores] = pi[n] + waiting[n - cores + 1];
  auto waiting_at = [&](int k) { return k < static_cast<int>(waiting.size()) ? waiting[k] : 0.0; };

  const std::size_t cells = static_cast<std::size_t>(cores) * b_max;
  std::vector<double> cur(cells, 0.0), next(cells, 0.0);
  auto inject = [&](int a, double mass) {
    double* row = cur.data() + static_cast<std::size_t>(a) * b_max;
    for (int b = 1; b <= b_max; ++b) row[b - 1] += mass * pb[b];
  };
  for (int n = 0; n <= std::min(cores - 1, n_max); ++n) inject(n, pi[n]);

  const double rate = cores * w.service_rate;
  const double t_max = grid.empty() ? 0.0 : grid.back();
  const double x_max = rate * t_max;

  // steps needed so that the Poisson(x_max) mass beyond them is < poisson_eps
  int k_limit = 0;
  if (x_max > 0.0) {
    double cdf = 0.0;
    for (int k = 0;; ++k) {
      cdf += std::exp(log_poisson(k, x_max));
      if (k > x_max && 1.0 - cdf < opts.poisson_eps) {
        k_limit = k;
        break;
      }
    }
  }

  std::vector<double> alive;  // alive[k] = P(not absorbed after k uniformized steps)
  alive.reserve(static_cast<std::size_t>(k_limit) + 1);
  alive.push_back(std::accumulate(cur.begin(), cur.end(), 0.0) + waiting_at(0));
  const double negligible = opts.poisson_eps * 1e-3;
  for (int k = 1; k <= k_limit && alive.back() > negligible; ++k) {
    const double in_service = opts.kernel == KernelMode::Parallel
                                  ? kernels::tagged_step_parallel(cur, next, cores, b_max)
                                  : kernels::tagged_step_serial(cur, next, cores, b_max);
    std::swap(cur, next);
    double entering = 0.0;
    if (cores - 1 + k <= n_max) {
      entering = pi[cores - 1 + k];
      inject(cores - 1, entering);
    }
    alive.push_back(in_service + entering + waiting_at(k));
  }

  SojournTail out;
  out.grid = grid;
  out.method = TailMethod::PhaseType;
  out.survival.reserve(grid.size());
  for (double t : grid) {
    if (t == 0.0) {
      out.survival.push_back(std::min(1.0, alive[0]));
      continue;
    }
    const double x = rate * t;
    double s = 0.0;
    for (std::size_t k = 0; k < alive.size(); ++k) s += std::exp(log_poisson(static_cast<int>(k), x)) * alive[k];
    out.survival.push_back(std::clamp(s, 0.0, 1.0));
  }
  // rounding must not break monotonicity
  for (std::size_t i = 1; i < out.survival.size(); ++i)
    out.survival[i] = std::min(out.survival[i], out.survival[i - 1]);
  return out;
}

}  // namespace cran::analytic
