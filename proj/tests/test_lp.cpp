// test_lp.cpp — the dense two-phase simplex on small hand-solvable programs:
// optima at known vertices, equality and >= rows, degeneracy, infeasibility,
// and unboundedness.
#include <doctest.h>

#include <cmath>

#include "cpk/lp.hpp"

using namespace cpk;

namespace {
constexpr double kTol = 1e-9;
}

TEST_CASE("a two-variable maximization lands on the binding vertex") {
  LpProblem p;
  p.objective = {3.0, 2.0};
  p.maximize = true;
  p.add_row(LpRow::LE, {1.0, 1.0}, 4.0);
  p.add_row(LpRow::LE, {1.0, 0.0}, 2.0);
  p.add_row(LpRow::LE, {0.0, 1.0}, 3.0);
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(10.0).epsilon(kTol));
  CHECK(sol.x[0] == doctest::Approx(2.0).epsilon(kTol));
  CHECK(sol.x[1] == doctest::Approx(2.0).epsilon(kTol));
}

TEST_CASE("minimization with a covering constraint uses the cheaper variable first") {
  LpProblem p;
  p.objective = {2.0, 3.0};
  p.maximize = false;
  p.add_row(LpRow::GE, {1.0, 1.0}, 4.0);
  p.add_row(LpRow::LE, {1.0, 0.0}, 3.0);
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(9.0).epsilon(kTol));
  CHECK(sol.x[0] == doctest::Approx(3.0).epsilon(kTol));
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(kTol));
}

TEST_CASE("equality rows pin the feasible set exactly") {
  LpProblem p;
  p.objective = {1.0, 1.0, 0.0};
  p.maximize = true;
  p.add_row(LpRow::EQ, {1.0, 1.0, 1.0}, 5.0);
  p.add_row(LpRow::LE, {0.0, 0.0, 1.0}, 5.0);
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(5.0).epsilon(kTol));
  CHECK(sol.x[0] + sol.x[1] + sol.x[2] == doctest::Approx(5.0).epsilon(kTol));
}

TEST_CASE("degenerate vertices with redundant rows still terminate at the optimum") {
  // Three constraints meet at (1,1); Bland's rule must not cycle.
  LpProblem p;
  p.objective = {1.0, 1.0};
  p.maximize = true;
  p.add_row(LpRow::LE, {1.0, 0.0}, 1.0);
  p.add_row(LpRow::LE, {0.0, 1.0}, 1.0);
  p.add_row(LpRow::LE, {1.0, 1.0}, 2.0);
  p.add_row(LpRow::LE, {2.0, 2.0}, 4.0);  // colinear duplicate
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(2.0).epsilon(kTol));
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(kTol));
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(kTol));
}

TEST_CASE("contradictory rows report infeasibility in the status") {
  LpProblem p;
  p.objective = {1.0, 1.0};
  p.add_row(LpRow::LE, {1.0, 1.0}, 1.0);
  p.add_row(LpRow::GE, {1.0, 1.0}, 3.0);
  auto sol = solve_lp(p);
  CHECK(sol.status == LpStatus::Infeasible);
}

TEST_CASE("a direction of unbounded improvement reports unboundedness") {
  LpProblem p;
  p.objective = {1.0};
  p.maximize = true;
  p.add_row(LpRow::GE, {1.0}, 1.0);
  auto sol = solve_lp(p);
  CHECK(sol.status == LpStatus::Unbounded);
}

TEST_CASE("minimization over a bounded-below cone is optimal at the bound") {
  LpProblem p;
  p.objective = {1.0};
  p.maximize = false;
  p.add_row(LpRow::GE, {1.0}, 2.5);
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(2.5).epsilon(kTol));
  CHECK(sol.x[0] == doctest::Approx(2.5).epsilon(kTol));
}

TEST_CASE("reported solutions satisfy their constraints") {
  LpProblem p;
  p.objective = {5.0, 4.0, 3.0};
  p.maximize = true;
  p.add_row(LpRow::LE, {2.0, 3.0, 1.0}, 5.0);
  p.add_row(LpRow::LE, {4.0, 1.0, 2.0}, 11.0);
  p.add_row(LpRow::LE, {3.0, 4.0, 2.0}, 8.0);
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  // Classic textbook instance; optimum 13 at (2, 0, 1).
  CHECK(sol.objective == doctest::Approx(13.0).epsilon(kTol));
  for (const auto& row : p.rows) {
    double lhs = 0.0;
    for (int j = 0; j < p.n_vars(); ++j) lhs += row.coeffs[std::size_t(j)] * sol.x[std::size_t(j)];
    CHECK(lhs <= row.rhs + 1e-8);
  }
  for (double v : sol.x) CHECK(v >= -1e-9);
  double obj = 0.0;
  for (int j = 0; j < p.n_vars(); ++j) obj += p.objective[std::size_t(j)] * sol.x[std::size_t(j)];
  CHECK(obj == doctest::Approx(sol.objective).epsilon(1e-9));
}
