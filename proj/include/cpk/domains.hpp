// domains.hpp — canonical benchmark domains plus reference baselines.
//
// Two built-in domains back the test suite and the CLI:
//   * a 12-state deterministic chain ("toy") with two marked desired states
//     and a slip-probability variant for stochastic evaluation tests, and
//   * a unit-square box-navigation world ("nav2d") with reward boxes and
//     three hand-written rule policies.
// The baselines — greedy single-change policy iteration and exhaustive
// policy enumeration — provide independent oracles for the budgeted
// optimizer.
#pragma once

#include <vector>

#include "cpk/cmdp.hpp"
#include "cpk/linalg.hpp"
#include "cpk/mdp.hpp"
#include "cpk/nav.hpp"

namespace cpk {

// ============================================================================
// Toy chain domain
// ============================================================================

/// Bundled toy domain: the chain MDP, the behavior and alternative policies,
/// and the two tracked outcomes (trajectory length, desired-state visits).
struct ToyDomain {
  TabularMdp mdp;
  TabularPolicy pi_b;
  TabularPolicy pi_e;
  OutcomeSet<int> outcomes;
};

/// Deterministic 12-state chain; s11 absorbs. The two policies disagree at
/// s0 (same successor), s1 and s5 (different successors); the alternative
/// route picks up the desired states s2 and s6 at the price of two extra
/// steps.
ToyDomain make_toy_mdp();

/// Same chain, but every move keeps the agent in place with probability
/// `slip`. Rewards are unchanged; all policies remain proper.
ToyDomain make_slip_toy(double slip = 0.1);

/// ε-soft mixture of a tabular policy: probability mass ε is spread
/// uniformly over all actions, the rest follows the base action row.
TabularPolicy make_epsilon_soft(const TabularPolicy& base, double epsilon);

// ============================================================================
// Box-navigation domain
// ============================================================================

/// Bundled navigation domain: the box world, the behavior policy, two
/// proposed alternatives, and the two tracked outcomes (steps spent in the
/// desired y-band, collected reward).
struct NavDomain {
  BoxNavMdp mdp;
  RulePolicy pi_b;
  RulePolicy pi_e1;
  RulePolicy pi_e2;
  OutcomeSet<Vec2> outcomes;

  /// Canonical start used for single-trajectory evaluation.
  Vec2 canonical_start{0.05, 0.05};
};

NavDomain make_nav_domain();

// ============================================================================
// Policy-iteration baseline
// ============================================================================

/// One recorded step of the greedy improvement loop: the policy after the
/// switch, its deviation cost versus the starting policy (aggregate visit
/// mass through the switched states), the number of changed states, and its
/// exact expected return.
struct ImprovementStep {
  TabularPolicy policy;
  double expected_cost = 0.0;
  int changed_states = 0;
  double expected_return = 0.0;
};

/// Greedy single-change policy iteration: starting from pi_b's argmax
/// determinization, repeatedly switch the single (state, action) with the
/// largest positive one-step gain Q(s,a) − Q(s,π(s)) under the current
/// values, until no gain exceeds 1e-10. Ties break toward the lowest state,
/// then the lowest action. The first recorded step is the starting policy
/// itself. When `allowed` is given, only flagged (state, action) pairs are
/// considered.
std::vector<ImprovementStep> policy_iteration_trace(
    const TabularMdp& mdp, const TabularPolicy& pi_b,
    const std::vector<std::vector<char>>* allowed = nullptr);

// ============================================================================
// Exhaustive search oracle
// ============================================================================

/// Best deterministic policy found by full enumeration.
struct ExhaustiveBest {
  TabularPolicy policy;
  double expected_return = 0.0;
  double expected_cost = 0.0;
};

/// Enumerates every deterministic policy over the transient states (actions
/// at absorbing states are fixed to 0), keeps those whose aggregate expected
/// deviation cost is within kappa + 1e-9, and returns the one with the
/// highest exact expected return; ties keep the lexicographically smallest
/// action vector. Policies that never reach absorption are skipped. When
/// `allowed` is given, enumeration is restricted to flagged pairs. Throws
/// TooLarge when the enumeration would exceed 10^7 policies.
ExhaustiveBest brute_force_cmdp(const TabularMdp& mdp, const Matrix& cost,
                                double kappa,
                                const std::vector<std::vector<char>>* allowed = nullptr);

}  // namespace cpk
