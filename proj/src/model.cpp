#include "cran/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace cran {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

BatchLaw BatchLaw::geometric(double q) {
  require(std::isfinite(q) && q >= 0.0 && q < 1.0, "geometric batch law needs 0 <= q < 1");
  return BatchLaw(Geometric{q});
}

BatchLaw BatchLaw::deterministic(int k) {
  require(k >= 1, "deterministic batch size must be >= 1");
  return BatchLaw(Deterministic{k});
}

BatchLaw BatchLaw::empirical(std::map<int, double> pmf) {
  require(!pmf.empty(), "empirical batch law is empty");
  double total = 0.0;
  for (const auto& [k, p] : pmf) {
    require(k >= 1, "empirical batch support must be >= 1");
    require(std::isfinite(p) && p >= 0.0, "empirical batch probabilities must be >= 0");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-12, "empirical batch probabilities must sum to 1");
  return BatchLaw(Empirical{std::move(pmf)});
}

double BatchLaw::mean() const {
  return std::visit(overloaded{
                        [](const Geometric& g) { return 1.0 / (1.0 - g.q); },
                        [](const Deterministic& d) { return static_cast<double>(d.k); },
                        [](const Empirical& e) {
                          double m = 0.0;
                          for (const auto& [k, p] : e.pmf) m += k * p;
                          return m;
                        },
                    },
                    kind_);
}

double BatchLaw::pmf(int k) const {
  if (k < 1) return 0.0;
  return std::visit(overloaded{
                        [k](const Geometric& g) { return (1.0 - g.q) * std::pow(g.q, k - 1); },
                        [k](const Deterministic& d) { return k == d.k ? 1.0 : 0.0; },
                        [k](const Empirical& e) {
                          auto it = e.pmf.find(k);
                          return it == e.pmf.end() ? 0.0 : it->second;
                        },
                    },
                    kind_);
}

double BatchLaw::at_least(int k) const {
  if (k <= 1) return 1.0;
  return std::visit(overloaded{
                        [k](const Geometric& g) { return std::pow(g.q, k - 1); },
                        [k](const Deterministic& d) { return k <= d.k ? 1.0 : 0.0; },
                        [k](const Empirical& e) {
                          double s = 0.0;
                          for (auto it = e.pmf.lower_bound(k); it != e.pmf.end(); ++it) s += it->second;
                          return s;
                        },
                    },
                    kind_);
}

int BatchLaw::sample(Rng& rng) const {
  return std::visit(overloaded{
                        [&rng](const Geometric& g) {
                          if (g.q == 0.0) return 1;
                          std::geometric_distribution<int> failures(1.0 - g.q);
                          return 1 + failures(rng);
                        },
                        [](const Deterministic& d) { return d.k; },
                        [&rng](const Empirical& e) {
                          std::uniform_real_distribution<double> u01(0.0, 1.0);
                          double u = u01(rng);
                          double acc = 0.0;
                          for (const auto& [k, p] : e.pmf) {
                            acc += p;
                            if (u < acc) return k;
                          }
                          return e.pmf.rbegin()->first;
                        },
                    },
                    kind_);
}

std::vector<double> BatchLaw::truncated_pmf(double tail_eps) const {
  std::vector<double> out;
  std::visit(overloaded{
                 [&](const Geometric& g) {
                   int b_max = 1;
                   if (g.q > 0.0) {
                     // q^b_max < tail_eps
                     b_max = std::max(1, static_cast<int>(std::ceil(std::log(tail_eps) / std::log(g.q))));
                   }
                   out.assign(b_max + 1, 0.0);
                   for (int k = 1; k <= b_max; ++k) out[k] = (1.0 - g.q) * std::pow(g.q, k - 1);
                 },
                 [&](const Deterministic& d) {
                   out.assign(d.k + 1, 0.0);
                   out[d.k] = 1.0;
                 },
                 [&](const Empirical& e) {
                   out.assign(e.pmf.rbegin()->first + 1, 0.0);
                   for (const auto& [k, p] : e.pmf) out[k] = p;
                 },
             },
             kind_);
  double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& p : out) p /= total;
  return out;
}

WorkloadSpec::WorkloadSpec(double lambda, BatchLaw b, double mu)
    : arrival_rate(lambda), batch(std::move(b)), service_rate(mu) {
  require(std::isfinite(lambda) && lambda > 0.0, "arrival_rate must be > 0");
  require(std::isfinite(mu) && mu > 0.0, "service_rate must be > 0");
}

SystemSpec::SystemSpec(int c, Discipline d, Impatience imp)
    : cores(c), discipline(std::move(d)), impatience(imp) {
  require(cores >= 1, "cores must be >= 1");
  if (const auto* ded = std::get_if<Dedicated>(&discipline)) {
    require(!ded->partition.empty(), "dedicated partition is empty");
    int total = 0;
    for (int p : ded->partition) {
      require(p >= 1, "dedicated partition entries must be >= 1");
      total += p;
    }
    require(total == cores, "dedicated partition must sum to cores");
  }
  if (const auto* dl = std::get_if<BatchDeadline>(&impatience)) {
    require(dl->deadline_ms > 0.0, "impatience deadline must be > 0");
  }
}

LatencyTarget::LatencyTarget(double d, double eps) : deadline_ms(d), tolerance(eps) {
  require(std::isfinite(d) && d > 0.0, "deadline must be > 0");
  require(eps > 0.0 && eps < 1.0, "tolerance must lie in (0, 1)");
}

void RadioWorkload::validate() const {
  require(n_cells >= 1, "n_cells must be >= 1");
  require(std::isfinite(tti_ms) && tti_ms > 0.0, "tti must be > 0");
  require(cb_max_bits >= 40, "cb_max_bits must be >= 40");
  require(decode_rate_bits_per_ms > 0.0, "decode rate must be > 0");
  require(per_job_overhead_ms >= 0.0, "per-job overhead must be >= 0");
  std::visit(overloaded{
                 [](const FixedBits& f) { require(f.bits >= 1, "TB size must be >= 1 bit"); },
                 [](const UniformBits& u) {
                   require(u.lo >= 1 && u.hi >= u.lo, "uniform TB size needs 1 <= lo <= hi");
                 },
                 [](const EmpiricalBits& e) {
                   require(!e.pmf.empty(), "empirical TB law is empty");
                   double total = 0.0;
                   for (const auto& [b, p] : e.pmf) {
                     require(b >= 1 && p >= 0.0, "empirical TB law needs bits >= 1 and p >= 0");
                     total += p;
                   }
                   require(std::abs(total - 1.0) <= 1e-12, "empirical TB probabilities must sum to 1");
                 },
             },
             tb_bits_law);
}

double RadioWorkload::mean_tb_bits() const {
  return std::visit(overloaded{
                        [](const FixedBits& f) { return static_cast<double>(f.bits); },
                        [](const UniformBits& u) { return 0.5 * static_cast<double>(u.lo + u.hi); },
                        [](const EmpiricalBits& e) {
                          double m = 0.0;
                          for (const auto& [b, p] : e.pmf) m += static_cast<double>(b) * p;
                          return m;
                        },
                    },
                    tb_bits_law);
}

std::int64_t code_block_count(std::int64_t bits, int cb_max_bits) {
  if (bits <= cb_max_bits) return 1;
  const std::int64_t payload = cb_max_bits - 24;  // 24-bit CRC per code block
  return (bits + payload - 1) / payload;
}

std::vector<std::int64_t> sample_subframe(const RadioWorkload& r, Rng& rng) {
  const int n_ue = r.ue_law.sample(rng);
  std::vector<std::int64_t> tbs;
  tbs.reserve(n_ue);
  for (int i = 0; i < n_ue; ++i) {
    tbs.push_back(std::visit(overloaded{
                                 [](const FixedBits& f) { return f.bits; },
                                 [&rng](const UniformBits& u) {
                                   std::uniform_int_distribution<std::int64_t> d(u.lo, u.hi);
                                   return d(rng);
                                 },
                                 [&rng](const EmpiricalBits& e) {
                                   std::uniform_real_distribution<double> u01(0.0, 1.0);
                                   double u = u01(rng);
                                   double acc = 0.0;
                                   for (const auto& [b, p] : e.pmf) {
                                     acc += p;
                                     if (u < acc) return b;
                                   }
                                   return e.pmf.rbegin()->first;
                                 },
                             },
                             r.tb_bits_law));
  }
  return tbs;
}

std::vector<std::int64_t> decompose(const std::vector<std::int64_t>& tb_bits, Parallelism mode,
                                    int cb_max_bits) {
  std::vector<std::int64_t> jobs;
  switch (mode) {
    case Parallelism::Subframe:
      jobs.push_back(std::accumulate(tb_bits.begin(), tb_bits.end(), std::int64_t{0}));
      break;
    case Parallelism::PerUE:
      jobs = tb_bits;
      break;
    case Parallelism::PerCB:
      for (std::int64_t tb : tb_bits) {
        const std::int64_t n = code_block_count(tb, cb_max_bits);
        // near-equal split; the remainder goes to the first blocks
        const std::int64_t base = tb / n, extra = tb % n;
        for (std::int64_t i = 0; i < n; ++i) jobs.push_back(base + (i < extra ? 1 : 0));
      }
      break;
  }
  return jobs;
}

std::vector<std::int64_t> decompose_subframe(const RadioWorkload& r, Rng& rng) {
  return decompose(sample_subframe(r, rng), r.parallelism, r.cb_max_bits);
}

OfferedLoad offered_load(const WorkloadSpec& w, int cores) {
  require(cores >= 1, "cores must be >= 1");
  const double rho = w.arrival_rate * w.batch.mean() / (w.service_rate * cores);
  return {rho, rho < 1.0};
}

double subframe_service_mean(const WorkloadSpec& w) {
  const auto* g = std::get_if<Geometric>(&w.batch.kind());
  if (g == nullptr) {
    throw ValidationError("subframe service time is exponential only for geometric batches");
  }
  return 1.0 / ((1.0 - g->q) * w.service_rate);
}

}  // namespace cran
