// test_domains.cpp — the built-in benchmark domains and the two reference
// baselines (greedy policy iteration, exhaustive enumeration).
//
// The navigation rollouts below are exact: coordinates accumulate ordinary
// floating-point error (0.05 + 9*0.1 lands just under 0.95, so a tenth east
// step is needed), and the expected totals 9.989 / 16.991 / 21.99 already
// account for that.
#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "cpk/domains.hpp"
#include "cpk/mdp.hpp"
#include "cpk/nav.hpp"

using namespace cpk;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ============================================================================
// Toy chain domain
// ============================================================================

TEST_CASE("toy outcome set tracks length (lower better) and desired visits") {
  auto toy = make_toy_mdp();
  REQUIRE(toy.outcomes.size() == 2);
  CHECK(toy.outcomes[0].name == "trajectory length");
  CHECK_FALSE(toy.outcomes[0].higher_is_better);
  CHECK(toy.outcomes[0].terminal_bonus == 1.0);
  CHECK(toy.outcomes[0].phrases.more == "longer trajectory");
  CHECK(toy.outcomes[0].phrases.less == "shorter trajectory");
  CHECK(toy.outcomes[1].name == "visits to desired states");
  CHECK(toy.outcomes[1].higher_is_better);
  CHECK(toy.outcomes[1].phrases.more == "more visits to desired states");
  // Desired states are exactly s2 and s6.
  for (int s = 0; s < 12; ++s)
    CHECK(toy.outcomes[1].g(s, 0) == ((s == 2 || s == 6) ? 1.0 : 0.0));
}

TEST_CASE("slip and soft-policy builders validate their parameters") {
  CHECK_THROWS_AS(make_slip_toy(1.0), CpkError);
  CHECK_THROWS_AS(make_slip_toy(-0.1), CpkError);
  auto toy = make_toy_mdp();
  CHECK_THROWS_AS(make_epsilon_soft(toy.pi_b, 1.5), CpkError);
  CHECK_THROWS_AS(make_epsilon_soft(toy.pi_b, -0.01), CpkError);
}

// ============================================================================
// Greedy policy iteration
// ============================================================================

TEST_CASE("policy iteration on the chain records baseline then both detours") {
  auto toy = make_toy_mdp();
  auto trace = policy_iteration_trace(toy.mdp, toy.pi_b);
  REQUIRE(trace.size() == 3);

  // Row 0 is the unmodified baseline.
  CHECK(trace[0].expected_cost == 0.0);
  CHECK(trace[0].changed_states == 0);
  CHECK(trace[0].expected_return == doctest::Approx(104.963 / 11.0).epsilon(1e-12));

  // The s5 detour has the larger one-step gain (3 vs 1), so it goes first
  // even though it is the more expensive change (6 crossing starts).
  CHECK(trace[1].changed_states == 1);
  CHECK(trace[1].policy.argmax_action(5) == 1);
  CHECK(trace[1].policy.argmax_action(1) == 0);
  CHECK(trace[1].expected_cost == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(trace[1].expected_return == doctest::Approx(122.963 / 11.0).epsilon(1e-12));

  CHECK(trace[2].changed_states == 2);
  CHECK(trace[2].policy.argmax_action(1) == 1);
  CHECK(trace[2].expected_cost == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(trace[2].expected_return == doctest::Approx(124.963 / 11.0).epsilon(1e-12));
}

TEST_CASE("policy iteration from an optimal policy records only the baseline") {
  auto toy = make_toy_mdp();
  auto trace = policy_iteration_trace(toy.mdp, toy.pi_e);
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].expected_return == doctest::Approx(124.963 / 11.0).epsilon(1e-12));
}

TEST_CASE("policy iteration honors the allowed-action mask") {
  auto toy = make_toy_mdp();
  std::vector<std::vector<char>> allowed(12, std::vector<char>(2, 1));
  allowed[5][1] = 0;  // forbid the s5 detour
  auto trace = policy_iteration_trace(toy.mdp, toy.pi_b, &allowed);
  REQUIRE(trace.size() == 2);
  CHECK(trace[1].policy.argmax_action(1) == 1);
  CHECK(trace[1].policy.argmax_action(5) == 0);
  CHECK(trace[1].expected_cost == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(trace[1].expected_return == doctest::Approx(106.963 / 11.0).epsilon(1e-12));
}

TEST_CASE("every policy-iteration point is matched by a budgeted solve") {
  auto toy = make_toy_mdp();
  for (const auto& step : policy_iteration_trace(toy.mdp, toy.pi_b)) {
    auto sol = solve_cmdp_milp(make_cmdp(toy.mdp, toy.pi_b, step.expected_cost + 1e-9));
    REQUIRE(sol.status == LpStatus::Optimal);
    // The budgeted optimum can only match or beat the greedy point; on this
    // chain the greedy points are themselves optimal for their cost.
    CHECK(sol.objective == doctest::Approx(step.expected_return).epsilon(1e-6));
  }
}

// ============================================================================
// Exhaustive enumeration
// ============================================================================

TEST_CASE("exhaustive search pins both ends of the chain frontier") {
  auto toy = make_toy_mdp();
  auto cost = deviation_cost(toy.mdp, toy.pi_b);

  auto none = brute_force_cmdp(toy.mdp, cost, 0.0);
  CHECK(none.expected_return == doctest::Approx(104.963 / 11.0).epsilon(1e-12));
  CHECK(none.expected_cost == doctest::Approx(0.0).epsilon(1e-9));
  for (int s = 0; s < 12; ++s) CHECK(none.policy.argmax_action(s) == 0);

  auto best = brute_force_cmdp(toy.mdp, cost, kInf);
  CHECK(best.expected_return == doctest::Approx(124.963 / 11.0).epsilon(1e-12));
  CHECK(best.expected_cost == doctest::Approx(8.0).epsilon(1e-9));
  // s0's actions tie (same successor, same reward); the lexicographic
  // tie-break keeps action 0 there, unlike the hand-written alternative.
  CHECK(best.policy.argmax_action(0) == 0);
  CHECK(best.policy.argmax_action(1) == 1);
  CHECK(best.policy.argmax_action(5) == 1);
}

// ============================================================================
// Navigation domain
// ============================================================================

TEST_CASE("navigation rewards follow goal, box priority, then step cost") {
  auto nav = make_nav_domain();
  CHECK(nav.mdp.reward_at({0.15, 0.05}) == 4.0);
  CHECK(nav.mdp.reward_at({0.25, 0.15}) == 3.0);
  CHECK(nav.mdp.reward_at({0.05, 0.35}) == 5.0);
  CHECK(nav.mdp.reward_at({0.55, 0.35}) == 7.0);
  CHECK(nav.mdp.reward_at({0.33, 0.77}) == -0.001);
  CHECK(nav.mdp.reward_at({0.96, 0.5}) == 10.0);
  CHECK(nav.mdp.is_absorbing({0.96, 0.5}));
  CHECK_FALSE(nav.mdp.is_absorbing({0.95, 0.5}));  // strictly beyond the line
  // Rewards are evaluated at the arrival state.
  CHECK(nav.mdp.reward({0.05, 0.05}, kEast) == 4.0);
}

TEST_CASE("the rule policies pick the documented actions") {
  auto nav = make_nav_domain();
  CHECK(nav.pi_b.act({0.05, 0.05}) == kNorth);
  CHECK(nav.pi_b.act({0.15, 0.45}) == kSouth);
  CHECK(nav.pi_b.act({0.45, 0.35}) == kSouth);
  CHECK(nav.pi_b.act({0.55, 0.25}) == kEast);

  CHECK(nav.pi_e1.act({0.05, 0.05}) == kEast);
  CHECK(nav.pi_e1.act({0.15, 0.15}) == kEast);
  CHECK(nav.pi_e1.act({0.15, 0.45}) == kSouth);

  CHECK(nav.pi_e2.act({0.05, 0.25}) == kNorth);
  CHECK(nav.pi_e2.act({0.05, 0.05}) == kNorth);
  CHECK(nav.pi_e2.act({0.15, 0.25}) == kEast);

  CHECK(std::string(nav_action_name(kEast)) == "E");
  CHECK(std::string(nav_action_name(kSouth)) == "S");
  CHECK(std::string(nav_action_word(kNorth)) == "north");
}

TEST_CASE("canonical-start rollouts land on their exact returns") {
  auto nav = make_nav_domain();
  Vec2 s0 = nav.canonical_start;
  CHECK((s0 == Vec2{0.05, 0.05}));

  auto tb = rollout(nav.mdp, nav.pi_b, s0, 30, 1);
  CHECK(tb.terminated);
  CHECK(tb.n_steps() == 12);  // two climbs, then ten easts along y = 0.25
  CHECK(tb.total_reward() == doctest::Approx(9.989).epsilon(1e-12));

  auto t1 = rollout(nav.mdp, nav.pi_e1, s0, 30, 1);
  CHECK(t1.terminated);
  CHECK(t1.n_steps() == 12);  // staircase through the 4- and 3-boxes
  CHECK(t1.total_reward() == doctest::Approx(16.991).epsilon(1e-12));

  auto t2 = rollout(nav.mdp, nav.pi_e2, s0, 30, 1);
  CHECK(t2.terminated);
  CHECK(t2.n_steps() == 13);  // three climbs, collecting the 5- and 7-boxes
  CHECK(t2.total_reward() == doctest::Approx(21.99).epsilon(1e-12));
}

TEST_CASE("rollouts terminate from anywhere in the start box") {
  auto nav = make_nav_domain();
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    Vec2 s0 = nav.mdp.sample_start(rng);
    CHECK(rollout(nav.mdp, nav.pi_b, s0, 30, 1).terminated);
    CHECK(rollout(nav.mdp, nav.pi_e1, s0, 30, 1).terminated);
    CHECK(rollout(nav.mdp, nav.pi_e2, s0, 30, 1).terminated);
  }
}

TEST_CASE("nav outcome set tracks band occupancy and collected reward") {
  auto nav = make_nav_domain();
  REQUIRE(nav.outcomes.size() == 2);
  CHECK(nav.outcomes[0].name == "desired-region stay");
  CHECK(nav.outcomes[0].g({0.5, 0.25}, kEast) == 1.0);
  CHECK(nav.outcomes[0].g({0.5, 0.35}, kEast) == 0.0);
  CHECK(nav.outcomes[1].name == "collected rewards");

  auto tb = rollout(nav.mdp, nav.pi_b, nav.canonical_start, 30, 1);
  CHECK(outcome_total(nav.outcomes[0], tb) == 10.0);  // easts along the band
  CHECK(outcome_total(nav.outcomes[1], tb) == doctest::Approx(9.989).epsilon(1e-12));
  auto t2 = rollout(nav.mdp, nav.pi_e2, nav.canonical_start, 30, 1);
  CHECK(outcome_total(nav.outcomes[0], t2) == 1.0);  // only the (0.05,0.25) stop
  CHECK(outcome_total(nav.outcomes[1], t2) == doctest::Approx(21.99).epsilon(1e-12));
}

TEST_CASE("rule policies serialize and deserialize unchanged") {
  auto nav = make_nav_domain();
  auto back = RulePolicy::from_json(nav.pi_e1.to_json());
  CHECK(back.default_action == nav.pi_e1.default_action);
  REQUIRE(back.rules.size() == nav.pi_e1.rules.size());
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Vec2 p{rng.uniform(), rng.uniform()};
    CHECK(back.act(p) == nav.pi_e1.act(p));
  }
}
