#pragma once

#include <stdexcept>
#include <string>

namespace cran {

/// Bad input: a type invariant or an operation precondition does not hold.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Offered load rho >= 1 where a stationary answer was requested.
struct InstabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// State-space truncation could not bring the neglected mass under its bound.
struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Core-count search exhausted its range.
struct NotFoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cran
