// cmdp.hpp — constrained policy improvement as an occupancy-measure MILP.
//
// The instance maximizes expected return subject to a budget on expected
// modification cost, over DETERMINISTIC policies: occupancy variables x(s,a)
// with flow conservation, a cost row, a per-state visit cap M, and the
// integrality requirement that each visited state's occupancy concentrates
// on a single action. Integrality is enforced by branch-and-bound on which
// actions a state may use (column exclusion), with the simplex solver from
// lp.hpp computing the node relaxations.
//
// Units: the flow equations are scaled so that every start state injects one
// unit of mass (flow_scale = number of start states). Costs and masses are
// then "aggregate" counts — with the unit deviation cost, expected_cost is
// the expected number of start states whose trajectory crosses a changed
// state — while objective values are reported per start.
#pragma once

#include <string>
#include <vector>

#include "cpk/common.hpp"
#include "cpk/lp.hpp"
#include "cpk/mdp.hpp"

namespace cpk {

struct CmdpInstance {
  TabularMdp mdp;
  TabularPolicy pi_b;                      // baseline: cost reference + fallback actions
  std::vector<std::vector<double>> cost;   // C(s,a), zero at absorbing states
  double kappa = 0.0;                      // budget in aggregate mass units; +inf = none
  double big_m = 0.0;                      // per-state visit cap, aggregate units
  double flow_scale = 1.0;                 // number of start states (p0 support size)
  std::vector<std::vector<char>> allowed;  // usable actions; pure self-loops are masked
};

/// Unit cost for deviating from pi_b's (argmax) action; zero at absorbing
/// states and for the baseline action itself.
std::vector<std::vector<double>> deviation_cost(const TabularMdp& mdp,
                                                const TabularPolicy& pi_b);

/// Maximal expected total visits over the flow polytope (normalized start
/// distribution): the LP max of sum x(s,a). Any larger constant is also a
/// valid visit cap. Raises Unbounded when some policy in the (optionally
/// masked) polytope never reaches an absorbing state.
double compute_big_m(const TabularMdp& mdp,
                     const std::vector<std::vector<char>>* allowed = nullptr);

/// Assembles an instance: deviation costs, the self-loop action mask, the
/// scaled visit cap, and the start-state scaling.
CmdpInstance make_cmdp(const TabularMdp& mdp, const TabularPolicy& pi_b, double kappa);

struct OccupancySolution {
  LpStatus status = LpStatus::Optimal;
  std::vector<std::vector<double>> x;   // occupancy, aggregate units
  std::vector<std::vector<int>> delta;  // action-selection indicators from x's support
  double objective = 0.0;               // expected return per start
  double objective_mass = 0.0;          // sum x.R (aggregate units)
  double expected_cost = 0.0;           // sum x.C (aggregate units)
  int aggregate_changes = 0;            // visited states whose action differs from pi_b
};

/// Exact MILP optimum via best-bound branch-and-bound; branches on the state
/// whose occupancy is least concentrated (conditional action share closest
/// to 1/2), child nodes forcing that action on or off. Integer tolerance
/// 1e-6 on action shares.
OccupancySolution solve_cmdp_milp(const CmdpInstance& instance);

/// Deterministic policy from an optimal occupancy: the argmax action where
/// the state carries mass, pi_b's action elsewhere. Raises NotOptimal for
/// non-optimal solutions.
TabularPolicy extract_policy(const OccupancySolution& solution, const CmdpInstance& instance);

struct FrontierRow {
  double kappa = 0.0;
  double expected_cost = 0.0;
  int aggregate_changes = 0;
  double expected_return = 0.0;  // per start
  TabularPolicy policy;
};

/// One MILP solve per budget (ascending); returns the realized frontier.
std::vector<FrontierRow> sweep_kappa(const TabularMdp& mdp, const TabularPolicy& pi_b,
                                     const std::vector<double>& kappas);

/// CSV with header kappa,expected_cost,aggregate_changes,expected_return.
std::string frontier_csv(const std::vector<FrontierRow>& frontier);

}  // namespace cpk
