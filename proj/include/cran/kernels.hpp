#pragma once

// One uniformized step of the tagged-batch service phase.
//
// State grid is row-major over (a, r): a = untagged jobs still ahead and in
// service (0 <= a < C), r = tagged jobs remaining (1 <= r <= b_max), stored at
// index a * b_max + (r - 1). With uniformization rate C*mu a step moves
//   (a, r) -> (a-1, r)  with probability a / C
//   (a, r) -> (a, r-1)  with probability min(r, C-a) / C   (r-1 == 0 absorbs)
// and stays put otherwise. Both variants return the surviving mass.

#include <span>

namespace cran::kernels {

double tagged_step_serial(std::span<const double> in, std::span<double> out, int cores, int b_max);

double tagged_step_parallel(std::span<const double> in, std::span<double> out, int cores, int b_max);

}  // namespace cran::kernels
