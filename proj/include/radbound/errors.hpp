#pragma once

#include <stdexcept>

namespace radbound {

// Violation of a structural assumption (degree homogeneity, graph-shift
// support). CLI maps this to exit code 2.
struct assumption_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure (divergence, eigensolver non-convergence). Exit code 3.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace radbound
