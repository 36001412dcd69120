// lp.cpp — two-phase dense simplex with Bland's rule.
#include "cpk/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpk {

namespace {

constexpr double kPivotFloor = 1e-11;   // pivots smaller than this are refused
constexpr double kReducedTol = 1e-9;    // reduced-cost optimality tolerance
constexpr double kFeasTol = 1e-8;       // residual tolerance for final checks

// Dense simplex tableau over columns [structural | slack/surplus | artificial]
// with the rhs kept separately. Basic solution lives in `basis` (one basic
// column per row).
struct Tableau {
  int m = 0;                    // rows
  int n = 0;                    // total columns
  int n_struct = 0;             // structural variables
  int art_begin = 0;            // first artificial column
  std::vector<std::vector<double>> a;  // m x n
  std::vector<double> rhs;             // m
  std::vector<int> basis;              // m

  void pivot(int row, int col) {
    double p = a[std::size_t(row)][std::size_t(col)];
    require(std::abs(p) >= kPivotFloor, ErrorCode::NumericalFailure,
            "simplex pivot below numerical floor");
    double inv = 1.0 / p;
    auto& prow = a[std::size_t(row)];
    for (double& v : prow) v *= inv;
    rhs[std::size_t(row)] *= inv;
    prow[std::size_t(col)] = 1.0;  // cut round-off on the pivot itself
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      double f = a[std::size_t(i)][std::size_t(col)];
      if (f == 0.0) continue;
      auto& irow = a[std::size_t(i)];
      for (int j = 0; j < n; ++j) irow[std::size_t(j)] -= f * prow[std::size_t(j)];
      irow[std::size_t(col)] = 0.0;
      rhs[std::size_t(i)] -= f * rhs[std::size_t(row)];
    }
    basis[std::size_t(row)] = col;
  }

  // Minimizes c.x over the current feasible basis by primal simplex with
  // Bland's rule. `allow` masks out columns (artificials in phase 2).
  // Returns false when the objective is unbounded below.
  bool minimize(const std::vector<double>& c, const std::vector<char>& allow) {
    while (true) {
      // Reduced costs: z_j - c_j with z from the basic cost vector.
      std::vector<double> y(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) y[std::size_t(i)] = c[std::size_t(basis[std::size_t(i)])];
      int enter = -1;
      for (int j = 0; j < n && enter < 0; ++j) {
        if (!allow[std::size_t(j)]) continue;
        bool basic = false;
        for (int i = 0; i < m; ++i) basic = basic || basis[std::size_t(i)] == j;
        if (basic) continue;
        double red = c[std::size_t(j)];
        for (int i = 0; i < m; ++i) red -= y[std::size_t(i)] * a[std::size_t(i)][std::size_t(j)];
        if (red < -kReducedTol) enter = j;  // Bland: first improving column
      }
      if (enter < 0) return true;  // optimal

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        double aij = a[std::size_t(i)][std::size_t(enter)];
        if (aij <= kPivotFloor) continue;
        double ratio = rhs[std::size_t(i)] / aij;
        // Bland: among minimal ratios take the row whose basic variable has
        // the lowest column index.
        if (ratio < best_ratio - 1e-12 ||
            (std::abs(ratio - best_ratio) <= 1e-12 &&
             (leave < 0 || basis[std::size_t(i)] < basis[std::size_t(leave)])))
        {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
  }
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
  int ns = problem.n_vars();
  require(ns >= 1, ErrorCode::InvalidConfig, "LP has no variables");
  for (const auto& r : problem.rows) {
    require(int(r.coeffs.size()) == ns, ErrorCode::DimensionMismatch,
            "LP row width does not match objective");
    require(std::isfinite(r.rhs), ErrorCode::InvalidConfig, "LP rhs not finite");
    for (double v : r.coeffs)
      require(std::isfinite(v), ErrorCode::InvalidConfig, "LP coefficient not finite");
  }
  for (double v : problem.objective)
    require(std::isfinite(v), ErrorCode::InvalidConfig, "LP objective not finite");

  int m = int(problem.rows.size());
  // Normalize rows to nonnegative rhs, then append one slack/surplus column
  // per inequality and one artificial per row that needs it.
  std::vector<LpRow> rows = problem.rows;
  for (auto& r : rows) {
    if (r.rhs < 0.0) {
      for (double& v : r.coeffs) v = -v;
      r.rhs = -r.rhs;
      r.rel = r.rel == LpRow::LE ? LpRow::GE : (r.rel == LpRow::GE ? LpRow::LE : LpRow::EQ);
    }
  }
  int n_slack = 0;
  for (const auto& r : rows) n_slack += r.rel != LpRow::EQ ? 1 : 0;

  Tableau t;
  t.m = m;
  t.n_struct = ns;
  t.art_begin = ns + n_slack;
  t.n = t.art_begin + m;  // worst case: one artificial per row (unused ones stay zero)
  t.a.assign(std::size_t(m), std::vector<double>(std::size_t(t.n), 0.0));
  t.rhs.assign(std::size_t(m), 0.0);
  t.basis.assign(std::size_t(m), -1);

  int slack_at = ns;
  int art_at = t.art_begin;
  std::vector<char> is_artificial(std::size_t(t.n), 0);
  for (int i = 0; i < m; ++i) {
    const auto& r = rows[std::size_t(i)];
    for (int j = 0; j < ns; ++j) t.a[std::size_t(i)][std::size_t(j)] = r.coeffs[std::size_t(j)];
    t.rhs[std::size_t(i)] = r.rhs;
    if (r.rel == LpRow::LE) {
      t.a[std::size_t(i)][std::size_t(slack_at)] = 1.0;
      t.basis[std::size_t(i)] = slack_at++;  // slack starts basic
    } else {
      if (r.rel == LpRow::GE) t.a[std::size_t(i)][std::size_t(slack_at++)] = -1.0;
      t.a[std::size_t(i)][std::size_t(art_at)] = 1.0;
      is_artificial[std::size_t(art_at)] = 1;
      t.basis[std::size_t(i)] = art_at++;
    }
  }

  std::vector<char> allow_all(std::size_t(t.n), 1);

  // Phase 1: drive the artificials to zero.
  bool need_phase1 = false;
  for (int j = t.art_begin; j < t.n; ++j) need_phase1 = need_phase1 || is_artificial[std::size_t(j)];
  if (need_phase1) {
    std::vector<double> c1(std::size_t(t.n), 0.0);
    for (int j = 0; j < t.n; ++j)
      if (is_artificial[std::size_t(j)]) c1[std::size_t(j)] = 1.0;
    bool bounded = t.minimize(c1, allow_all);
    require(bounded, ErrorCode::NumericalFailure, "phase-1 objective unbounded");
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
      if (is_artificial[std::size_t(t.basis[std::size_t(i)])]) infeas += t.rhs[std::size_t(i)];
    if (infeas > kFeasTol) return {LpStatus::Infeasible, {}, 0.0};
    // Pivot lingering zero-level artificials out of the basis when possible.
    for (int i = 0; i < m; ++i) {
      if (!is_artificial[std::size_t(t.basis[std::size_t(i)])]) continue;
      int col = -1;
      for (int j = 0; j < t.art_begin && col < 0; ++j)
        if (std::abs(t.a[std::size_t(i)][std::size_t(j)]) >= kPivotFloor) col = j;
      if (col >= 0) t.pivot(i, col);
      // else: redundant row; its artificial stays basic at value 0, harmless.
    }
  }

  // Phase 2: optimize the real objective with artificials frozen out.
  std::vector<char> allow2(std::size_t(t.n), 1);
  for (int j = 0; j < t.n; ++j)
    if (is_artificial[std::size_t(j)]) allow2[std::size_t(j)] = 0;
  std::vector<double> c2(std::size_t(t.n), 0.0);
  for (int j = 0; j < ns; ++j)
    c2[std::size_t(j)] = problem.maximize ? -problem.objective[std::size_t(j)]
                                          : problem.objective[std::size_t(j)];
  if (!t.minimize(c2, allow2)) return {LpStatus::Unbounded, {}, 0.0};

  LpSolution sol;
  sol.status = LpStatus::Optimal;
  sol.x.assign(std::size_t(ns), 0.0);
  for (int i = 0; i < m; ++i)
    if (t.basis[std::size_t(i)] < ns)
      sol.x[std::size_t(t.basis[std::size_t(i)])] = t.rhs[std::size_t(i)];
  double obj = 0.0;
  for (int j = 0; j < ns; ++j) obj += problem.objective[std::size_t(j)] * sol.x[std::size_t(j)];
  sol.objective = obj;

  // Final residual audit against the original rows.
  for (const auto& r : problem.rows) {
    double lhs = 0.0;
    for (int j = 0; j < ns; ++j) lhs += r.coeffs[std::size_t(j)] * sol.x[std::size_t(j)];
    double resid = lhs - r.rhs;
    bool ok = r.rel == LpRow::EQ   ? std::abs(resid) <= kFeasTol * (1.0 + std::abs(r.rhs))
              : r.rel == LpRow::LE ? resid <= kFeasTol * (1.0 + std::abs(r.rhs))
                                   : resid >= -kFeasTol * (1.0 + std::abs(r.rhs));
    require(ok, ErrorCode::NumericalFailure, "LP solution failed residual audit");
  }
  for (double v : sol.x)
    require(v >= -kFeasTol, ErrorCode::NumericalFailure, "LP produced negative variable");
  return sol;
}

}  // namespace cpk
