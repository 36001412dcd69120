// linalg.hpp — dense Gaussian elimination for the small linear systems used
// by exact policy evaluation and occupancy computations.
#pragma once

#include <cmath>
#include <vector>

#include "cpk/common.hpp"

namespace cpk {

using Matrix = std::vector<std::vector<double>>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Throws NumericalFailure when the system is (near-)singular, which callers
/// interpret as an improper policy for evaluation systems.
inline std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
  const std::size_t n = a.size();
  require(b.size() == n, ErrorCode::DimensionMismatch, "solve_linear: rhs size");
  for (std::size_t col = 0; col < n; ++col) {
    // Partial pivot: bring the largest remaining entry into the diagonal.
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) < 1e-12)
      fail(ErrorCode::NumericalFailure, "solve_linear: singular system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double acc = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) acc -= a[ri][c] * x[c];
    x[ri] = acc / a[ri][ri];
  }
  return x;
}

}  // namespace cpk
