#include "cran/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace cran::dimension {

namespace {

bool meets(const CurvePoint& p, double tolerance) { return p.exceedance + p.ci_half_width < tolerance; }

}  // namespace

int min_stable_cores(const WorkloadSpec& w) {
  return static_cast<int>(std::floor(w.arrival_rate * w.batch.mean() / w.service_rate)) + 1;
}

CurvePoint exceedance_at(const WorkloadSpec& w, int cores, double deadline_ms, const SearchOptions& opts) {
  CurvePoint p;
  p.cores = cores;
  p.stable = offered_load(w, cores).stable;
  if (opts.backend == Backend::Analytic) {
    if (!p.stable) {
      p.exceedance = 1.0;
      return p;
    }
    analytic::TailOptions to;
    to.kernel = opts.kernel;
    p.exceedance = analytic::batch_sojourn_tail(w, cores, {deadline_ms}, to).survival[0];
    return p;
  }

  if (!opts.sim_template) throw ValidationError("simulation backend needs a simulation template");
  sim::SimConfig cfg = *opts.sim_template;
  cfg.workload = w;
  cfg.system = SystemSpec(cores);
  if (cfg.replications >= 2) {
    const auto rep = sim::replicate(cfg);
    const auto iv = rep.exceedance(deadline_ms);
    p.exceedance = iv.value;
    p.ci_half_width = iv.half_width;
  } else {
    const auto iv = sim::run(cfg).exceedance(deadline_ms);
    p.exceedance = iv.value;
    p.ci_half_width = iv.half_width;
  }
  return p;
}

std::vector<CurvePoint> exceedance_curve_serial(const WorkloadSpec& w, double deadline_ms, int c_from, int c_to,
                                                const SearchOptions& opts) {
  if (c_from < 1 || c_to < c_from) throw ValidationError("curve needs 1 <= c_from <= c_to");
  std::vector<CurvePoint> out;
  for (int c = c_from; c <= c_to; ++c) out.push_back(exceedance_at(w, c, deadline_ms, opts));
  return out;
}

std::vector<CurvePoint> exceedance_curve(const WorkloadSpec& w, double deadline_ms, int c_from, int c_to,
                                         const SearchOptions& opts) {
  if (c_from < 1 || c_to < c_from) throw ValidationError("curve needs 1 <= c_from <= c_to");
  const int n = c_to - c_from + 1;
  std::vector<CurvePoint> out(n);
  SearchOptions inner = opts;
  inner.kernel = analytic::KernelMode::Serial;  // parallelism is across points here
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) out[i] = exceedance_at(w, c_from + i, deadline_ms, inner);
  return out;
}

DimensioningResult required_cores(const WorkloadSpec& w, const LatencyTarget& target, const SearchOptions& opts) {
  DimensioningResult res;
  res.backend = opts.backend;
  res.target = target;
  res.c_stability = min_stable_cores(w);
  const int c_max = opts.c_max > 0 ? opts.c_max : 4 * res.c_stability;
  if (c_max < res.c_stability) {
    throw InstabilityError("c_max = " + std::to_string(c_max) + " is below the stability threshold " +
                           std::to_string(res.c_stability));
  }

  std::map<int, CurvePoint> seen;
  auto eval = [&](int c) -> const CurvePoint& {
    auto it = seen.find(c);
    if (it == seen.end()) it = seen.emplace(c, exceedance_at(w, c, target.deadline_ms, opts)).first;
    return it->second;
  };
  auto finish = [&](int found) {
    res.c_required = found;
    for (const auto& [c, p] : seen) res.curve.push_back(p);
    return res;
  };

  if (!opts.accelerate) {
    for (int c = res.c_stability; c <= c_max; ++c)
      if (meets(eval(c), target.tolerance)) return finish(c);
  } else {
    // exponential probing: C_s, C_s+1, C_s+3, C_s+7, ...
    int fail = res.c_stability - 1, pass = -1;
    for (int step = 1;; step *= 2) {
      const int c = std::min(res.c_stability + step - 1, c_max);
      if (meets(eval(c), target.tolerance)) {
        pass = c;
        break;
      }
      fail = c;
      if (c == c_max) break;
    }
    if (pass > 0) {
      while (pass - fail > 1) {
        const int mid = fail + (pass - fail) / 2;
        if (meets(eval(mid), target.tolerance)) pass = mid;
        else fail = mid;
      }
      return finish(pass);
    }
  }
  for (const auto& [c, p] : seen) res.curve.push_back(p);
  throw NotFoundError("no core count up to " + std::to_string(c_max) + " meets the tolerance");
}

}  // namespace cran::dimension
