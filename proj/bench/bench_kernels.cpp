// Serial reference vs OpenMP versions of the hot loops. Prints wall-clock
// times and checks that both produce the same numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <omp.h>

#include "cran/analytic.hpp"
#include "cran/dimension.hpp"
#include "cran/kernels.hpp"
#include "cran/simulate.hpp"

using namespace cran;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel, same ? "match" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  const int scale = argc > 1 ? std::max(1, std::atoi(argv[1])) : 1;
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial_s", "omp_s", "speedup");

  {
    const int cores = 256 * scale, b_max = 400;
    std::vector<double> in(static_cast<std::size_t>(cores) * b_max), a(in.size()), b(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = 1.0 / static_cast<double>(1 + i % 97);
    double ms = 0.0, mp = 0.0;
    const double ts = best_of(5, [&] {
      for (int k = 0; k < 50; ++k) ms = kernels::tagged_step_serial(in, a, cores, b_max);
    });
    const double tp = best_of(5, [&] {
      for (int k = 0; k < 50; ++k) mp = kernels::tagged_step_parallel(in, b, cores, b_max);
    });
    row("tagged_step x50", ts, tp, std::abs(ms - mp) <= 1e-12 * std::abs(ms) && a == b);
  }

  {
    const WorkloadSpec w(60.0, BatchLaw::geometric(0.8), 3.0);
    const std::vector<double> grid{0.5, 1.0, 2.0, 4.0};
    analytic::TailOptions so, po;
    so.kernel = analytic::KernelMode::Serial;
    po.kernel = analytic::KernelMode::Parallel;
    analytic::SojournTail s, p;
    const double ts = best_of(3, [&] { s = analytic::batch_sojourn_tail(w, 110, grid, so); });
    const double tp = best_of(3, [&] { p = analytic::batch_sojourn_tail(w, 110, grid, po); });
    bool same = true;
    for (std::size_t i = 0; i < grid.size(); ++i) same &= std::abs(s.survival[i] - p.survival[i]) < 1e-12;
    row("batch_sojourn_tail C=110", ts, tp, same);
  }

  {
    sim::SimConfig cfg{WorkloadSpec(6.0, BatchLaw::geometric(0.5), 1.0), SystemSpec(16)};
    cfg.horizon_ms = 2e3 * scale;
    cfg.replications = 16;
    sim::ReplicatedMetrics s, p;
    const double ts = best_of(1, [&] { s = sim::replicate_serial(cfg); });
    const double tp = best_of(1, [&] { p = sim::replicate(cfg); });
    row("replicate x16", ts, tp, s.exceedance(2.0).value == p.exceedance(2.0).value);
  }

  {
    const WorkloadSpec w(20.0, BatchLaw::geometric(0.7), 2.0);
    dimension::SearchOptions opts;
    std::vector<dimension::CurvePoint> s, p;
    const double ts = best_of(1, [&] { s = dimension::exceedance_curve_serial(w, 1.0, 34, 60, opts); });
    const double tp = best_of(1, [&] { p = dimension::exceedance_curve(w, 1.0, 34, 60, opts); });
    bool same = s.size() == p.size();
    for (std::size_t i = 0; same && i < s.size(); ++i) same = std::abs(s[i].exceedance - p[i].exceedance) < 1e-12;
    row("exceedance_curve 34..60", ts, tp, same);
  }
  return 0;
}
