#include "cran/kernels.hpp"

#include <algorithm>
#include <cstddef>

namespace cran::kernels {

namespace {

inline double row_update(std::span<const double> in, std::span<double> out, int a, int cores, int b_max) {
  const double inv_c = 1.0 / cores;
  const std::size_t row = static_cast<std::size_t>(a) * b_max;
  const std::size_t below = row + b_max;  // row a+1
  const bool has_below = a + 1 < cores;
  double alive = 0.0;
  for (int r = 1; r <= b_max; ++r) {
    const std::size_t i = row + (r - 1);
    const int served = std::min(r, cores - a);
    double v = in[i] * (1.0 - (a + served) * inv_c);
    if (has_below) v += in[below + (r - 1)] * ((a + 1) * inv_c);
    if (r < b_max) v += in[i + 1] * (std::min(r + 1, cores - a) * inv_c);
    out[i] = v;
    alive += v;
  }
  return alive;
}

}  // namespace

double tagged_step_serial(std::span<const double> in, std::span<double> out, int cores, int b_max) {
  double alive = 0.0;
  for (int a = 0; a < cores; ++a) alive += row_update(in, out, a, cores, b_max);
  return alive;
}

double tagged_step_parallel(std::span<const double> in, std::span<double> out, int cores, int b_max) {
  double alive = 0.0;
#pragma omp parallel for reduction(+ : alive) schedule(static)
  for (int a = 0; a < cores; ++a) alive += row_update(in, out, a, cores, b_max);
  return alive;
}

}  // namespace cran::kernels
