// lp.hpp — a small dense linear-programming solver.
//
// Two-phase primal simplex over the standard form (variables implicitly
// >= 0; upper bounds are expressed as rows). Bland's rule everywhere, so the
// method cannot cycle; dense tableaus are plenty at this project's scale
// (at most a few hundred variables).
#pragma once

#include <vector>

#include "cpk/common.hpp"

namespace cpk {

struct LpRow {
  enum Rel { LE, EQ, GE } rel = LE;
  std::vector<double> coeffs;
  double rhs = 0.0;
};

struct LpProblem {
  std::vector<double> objective;
  bool maximize = true;
  std::vector<LpRow> rows;

  int n_vars() const { return int(objective.size()); }
  void add_row(LpRow::Rel rel, std::vector<double> coeffs, double rhs) {
    rows.push_back({rel, std::move(coeffs), rhs});
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  std::vector<double> x;      // meaningful when status == Optimal
  double objective = 0.0;     // in the problem's own sense (max or min)
};

/// Solves the LP exactly up to residual 1e-8. Infeasible/Unbounded are
/// reported in the returned status, not raised; NumericalFailure is raised
/// when a pivot falls below 1e-11 or the final residual check fails.
LpSolution solve_lp(const LpProblem& problem);

}  // namespace cpk
