// test_regions.cpp — disagreement-region discovery on the navigation domain,
// the tabular model estimated over those regions, and lifting tabular
// policies back to rule policies.
//
// The five expected boxes and every reward in the expected tabular model are
// derived by replaying the rule policies by hand; coordinates accumulate
// floating-point error, so box bounds are constructed as i*0.05 products and
// nothing here assumes 0.3 or 0.6 are exactly representable.
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "cpk/domains.hpp"
#include "cpk/mdp.hpp"
#include "cpk/region_bridge.hpp"

using namespace cpk;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double grid(int i) { return i * 0.05; }

RegionSet collect_default(const NavDomain& nav, std::uint64_t seed) {
  RegionCollectConfig cfg;
  return collect_regions(nav.pi_b, {nav.pi_e1, nav.pi_e2}, nav.mdp, cfg, seed);
}

/// The five hand-derived disagreement boxes in (x_lo, y_lo) order, as grid
/// index quadruples {x_lo, x_hi, y_lo, y_hi} in units of 0.05.
const int kExpectedBoxes[5][4] = {
    {0, 2, 0, 2},   // start box: climb vs leave east
    {0, 2, 4, 6},   // left column: east vs keep climbing
    {2, 4, 2, 4},   // staircase box: climb vs cut east
    {2, 4, 6, 8},   // upper corridor: dive vs continue east
    {8, 10, 6, 8},  // second corridor: dive vs continue east
};

const int kExpectedActionB[5] = {kNorth, kEast, kNorth, kSouth, kSouth};
const int kExpectedActionE[5] = {kEast, kNorth, kEast, kEast, kEast};

}  // namespace

// ============================================================================
// Collection
// ============================================================================

TEST_CASE("collection finds the five disagreement boxes on the grid") {
  auto nav = make_nav_domain();
  for (std::uint64_t seed : {7u, 21u}) {
    CAPTURE(seed);
    auto rs = collect_default(nav, seed);
    REQUIRE(rs.size() == 5);
    CHECK(rs.goal_x == 0.95);
    for (int k = 0; k < 5; ++k) {
      CAPTURE(k);
      const Region& r = rs.regions[std::size_t(k)];
      CHECK(r.label == k);
      CHECK(r.x_lo == grid(kExpectedBoxes[k][0]));
      CHECK(r.x_hi == grid(kExpectedBoxes[k][1]));
      CHECK(r.y_lo == grid(kExpectedBoxes[k][2]));
      CHECK(r.y_hi == grid(kExpectedBoxes[k][3]));
      CHECK(r.action_b == kExpectedActionB[k]);
      CHECK(r.action_e == kExpectedActionE[k]);
      CHECK(r.contains(r.representative));
      // The canonical start is drawn first, so the representative is the
      // first disagreement point on the canonical branching tree.
      CHECK(nav.pi_b.act(r.representative) == r.action_b);
    }
    CHECK(rs.regions[0].representative.x == 0.05);
    CHECK(rs.regions[0].representative.y == 0.05);
    CHECK(rs.regions[3].desc == "0.1≤x<0.2, 0.3≤y<0.4");
  }
}

TEST_CASE("an identical candidate contributes no regions") {
  auto nav = make_nav_domain();
  RegionCollectConfig cfg;
  auto rs = collect_regions(nav.pi_b, {nav.pi_b}, nav.mdp, cfg, 7);
  CHECK(rs.size() == 0);
  CHECK_THROWS_AS(build_region_mdp(RegionTrajectories{}, rs), CpkError);
  CHECK_THROWS_AS(collect_regions(nav.pi_b, {}, nav.mdp, cfg, 7), CpkError);
}

TEST_CASE("region lookup respects the half-open bounds") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  CHECK(rs.region_of({0.05, 0.05}) == 0);
  CHECK(rs.region_of({0.05, 0.25}) == 1);
  CHECK(rs.region_of({0.15, 0.15}) == 2);
  CHECK(rs.region_of({0.15, 0.35}) == 3);
  CHECK(rs.region_of({0.45, 0.35}) == 4);
  CHECK(rs.region_of({0.55, 0.55}) == -1);
  CHECK(rs.region_of({0.1, 0.05}) == -1);  // x_hi excluded from the start box
  CHECK(desc_from_box(grid(2), grid(4), grid(6), grid(8)) == "0.1≤x<0.2, 0.3≤y<0.4");
}

// ============================================================================
// Trajectory harness
// ============================================================================

TEST_CASE("the harness produces three mains and one probe per pair") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  RegionCollectConfig cfg;
  auto trajs = build_region_trajectories(nav.mdp, nav.pi_b, {nav.pi_e1, nav.pi_e2}, rs, cfg);
  REQUIRE(trajs.main.size() == 3);
  REQUIRE(trajs.probes.size() == 15);

  // Mains replay the raw policies from the canonical start.
  CHECK(trajs.main[0].total_reward() == doctest::Approx(9.989).epsilon(1e-12));
  CHECK(trajs.main[1].total_reward() == doctest::Approx(16.991).epsilon(1e-12));
  CHECK(trajs.main[2].total_reward() == doctest::Approx(21.99).epsilon(1e-12));

  // Probe (k, a) starts at region k's representative and takes a there.
  for (int k = 0; k < 5; ++k)
    for (int a = 0; a < 3; ++a) {
      const auto& pr = trajs.probes[std::size_t(k * 3 + a)];
      REQUIRE(pr.n_steps() >= 1);
      CHECK((pr.states[0] == rs.regions[std::size_t(k)].representative));
      CHECK(pr.actions[0] == a);
    }

  // Forcing south in the start box bounces against the behavior policy's
  // climb: the probe cycles forever and is truncated at the step cap.
  CHECK_FALSE(trajs.probes[kSouth].terminated);
  CHECK(trajs.probes[kSouth].n_steps() == 200);
}

// ============================================================================
// Tabular model over regions
// ============================================================================

TEST_CASE("the estimated tabular model matches the hand-derived table") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  RegionCollectConfig cfg;
  auto trajs = build_region_trajectories(nav.mdp, nav.pi_b, {nav.pi_e1, nav.pi_e2}, rs, cfg);
  auto rm = build_region_mdp(trajs, rs);

  REQUIRE(rm.mdp.n_states == 6);
  CHECK(rm.absorbing_state() == 5);
  CHECK(rm.mdp.absorbing[5]);
  CHECK((rm.action_b == std::vector<int>{kNorth, kEast, kNorth, kSouth, kSouth}));

  // All three mains start inside the start box.
  CHECK(rm.mdp.initial_dist[0] == 1.0);
  for (int k = 1; k < 6; ++k) CHECK(rm.mdp.initial_dist[std::size_t(k)] == 0.0);

  // Deterministic successor per (region, action); K = 5 is absorbing.
  const int succ[5][3] = {{2, 1, 0}, {5, 3, 1}, {5, 5, 2}, {4, 3, 5}, {5, 4, 5}};
  const double rew[5][3] = {{3.999, -0.002, -0.002},
                            {9.991, 4.999, -0.002},
                            {12.992, 9.991, 3.999},
                            {-0.003, -0.002, 9.991},
                            {16.996, -0.002, 9.994}};
  for (int k = 0; k < 5; ++k)
    for (int a = 0; a < 3; ++a) {
      CAPTURE(k);
      CAPTURE(a);
      CHECK(rm.covered[std::size_t(k)][std::size_t(a)] == 1);
      CHECK(rm.mdp.transition[std::size_t(k)][std::size_t(a)][std::size_t(succ[k][a])] == 1.0);
      CHECK(rm.mdp.reward[std::size_t(k)][std::size_t(a)] ==
            doctest::Approx(rew[k][a]).epsilon(1e-9));
    }

  // Segment counts: mains and probe continuations stack up, and the bouncing
  // self-loop probes contribute 99 closed cycles each before truncation.
  CHECK(rm.samples[0][kEast] == 2);
  CHECK(rm.samples[0][kNorth] == 3);
  CHECK(rm.samples[0][kSouth] == 99);
  CHECK(rm.samples[1][kEast] == 3);
  CHECK(rm.samples[1][kNorth] == 2);
  CHECK(rm.samples[2][kNorth] == 2);
  CHECK(rm.samples[3][kSouth] == 2);
  CHECK(rm.samples[4][kEast] == 2);

  // The behavior policy's value through the region model matches its real
  // rollout: enter the left column, then ride east to the goal.
  auto pi_b_region = TabularPolicy::deterministic(6, 3, {kNorth, kEast, kNorth, kSouth, kSouth, 0});
  CHECK(expected_return_exact(rm.mdp, pi_b_region) == doctest::Approx(9.989).epsilon(1e-9));
}

TEST_CASE("a region never visited by any rollout raises a coverage error") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  RegionTrajectories sparse;
  sparse.main.push_back(rollout(nav.mdp, nav.pi_b, {0.05, 0.05}, 200, 0));
  // The behavior rollout only crosses the start box and the left column;
  // the staircase and corridor regions stay unsampled.
  CHECK_THROWS_AS(build_region_mdp(sparse, rs), CpkError);
  try {
    build_region_mdp(sparse, rs);
  } catch (const CpkError& e) {
    CHECK(e.code() == ErrorCode::NoCoverage);
  }
}

TEST_CASE("mains that never enter a region cannot define a start distribution") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  RegionCollectConfig cfg;
  auto trajs = build_region_trajectories(nav.mdp, nav.pi_b, {nav.pi_e1, nav.pi_e2}, rs, cfg);
  trajs.main.clear();
  trajs.main.push_back(rollout(nav.mdp, nav.pi_b, {0.55, 0.05}, 200, 0));
  CHECK_THROWS_AS(build_region_mdp(trajs, rs), CpkError);
}

// ============================================================================
// Budgeted improvement over the region model
// ============================================================================

TEST_CASE("the region model reproduces the navigation frontier") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  RegionCollectConfig cfg;
  auto rm = build_region_mdp(
      build_region_trajectories(nav.mdp, nav.pi_b, {nav.pi_e1, nav.pi_e2}, rs, cfg), rs);
  auto pi_b_region = TabularPolicy::deterministic(6, 3, {kNorth, kEast, kNorth, kSouth, kSouth, 0});

  auto rows = sweep_kappa(rm.mdp, pi_b_region, {0.0, 1.0, 2.0, 3.0});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].expected_return == doctest::Approx(9.989).epsilon(1e-9));
  CHECK(rows[1].expected_return == doctest::Approx(14.988).epsilon(1e-9));
  CHECK(rows[2].expected_return == doctest::Approx(16.991).epsilon(1e-9));
  CHECK(rows[3].expected_return == doctest::Approx(21.99).epsilon(1e-9));
  CHECK(rows[0].aggregate_changes == 0);
  CHECK(rows[3].aggregate_changes == 3);

  // Unbounded budget: climb the left column, then ride the upper corridor.
  auto inst = make_cmdp(rm.mdp, pi_b_region, kInf);
  auto sol = solve_cmdp_milp(inst);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(21.99).epsilon(1e-9));
  auto best = extract_policy(sol, inst);
  CHECK(best.argmax_action(0) == kNorth);
  CHECK(best.argmax_action(1) == kNorth);
  CHECK(best.argmax_action(3) == kEast);
  CHECK(best.argmax_action(4) == kEast);

  // The bouncing self-loop pairs are masked out of the instance.
  CHECK(inst.allowed[0][kSouth] == 0);
  CHECK(inst.allowed[3][kNorth] == 0);
  CHECK(inst.allowed[0][kNorth] == 1);
}

TEST_CASE("greedy improvement on the region model records the known trace") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  RegionCollectConfig cfg;
  auto rm = build_region_mdp(
      build_region_trajectories(nav.mdp, nav.pi_b, {nav.pi_e1, nav.pi_e2}, rs, cfg), rs);
  auto pi_b_region = TabularPolicy::deterministic(6, 3, {kNorth, kEast, kNorth, kSouth, kSouth, 0});
  auto inst = make_cmdp(rm.mdp, pi_b_region, kInf);

  auto trace = policy_iteration_trace(rm.mdp, pi_b_region, &inst.allowed);
  REQUIRE(trace.size() == 5);
  // Off-path switches (the second corridor, then the upper corridor) are
  // free; the third switch reroutes the realized trajectory and pays for all
  // three crossed regions at once.
  const double costs[5] = {0.0, 0.0, 0.0, 3.0, 3.0};
  const int changed[5] = {0, 1, 2, 3, 4};
  const double returns[5] = {9.989, 9.989, 9.989, 21.99, 21.99};
  for (int i = 0; i < 5; ++i) {
    CAPTURE(i);
    CHECK(trace[std::size_t(i)].expected_cost == doctest::Approx(costs[i]).epsilon(1e-9));
    CHECK(trace[std::size_t(i)].changed_states == changed[i]);
    CHECK(trace[std::size_t(i)].expected_return == doctest::Approx(returns[i]).epsilon(1e-9));
  }
}

// ============================================================================
// Lifting
// ============================================================================

TEST_CASE("lifted policies act by region inside and fall back outside") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  auto lifted = lift_policy({kNorth, kNorth, kNorth, kEast, kEast}, nav.pi_b, rs);
  CHECK(lifted.act({0.05, 0.25}) == kNorth);
  CHECK(lifted.act({0.15, 0.35}) == kEast);
  CHECK(lifted.act({0.45, 0.35}) == kEast);
  CHECK(lifted.act({0.15, 0.45}) == kSouth);  // behavior rule outside regions
  CHECK(lifted.act({0.55, 0.25}) == kEast);

  // The lifted unbounded optimum realizes the region model's prediction.
  auto traj = rollout(nav.mdp, lifted, {0.05, 0.05}, 40, 1);
  CHECK(traj.terminated);
  CHECK(traj.total_reward() == doctest::Approx(21.99).epsilon(1e-12));

  CHECK_THROWS_AS(lift_policy(std::vector<int>{kEast, kEast}, nav.pi_b, rs), CpkError);
}

TEST_CASE("region returns predict lifted rollouts for other assignments") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  RegionCollectConfig cfg;
  auto rm = build_region_mdp(
      build_region_trajectories(nav.mdp, nav.pi_b, {nav.pi_e1, nav.pi_e2}, rs, cfg), rs);

  const std::vector<std::vector<int>> assignments = {
      {kEast, kEast, kEast, kSouth, kSouth},    // leave east, cut the staircase
      {kNorth, kNorth, kNorth, kSouth, kEast},  // climb, then dive back early
      {kEast, kEast, kNorth, kSouth, kSouth},   // east then resume the climb
  };
  for (const auto& assign : assignments) {
    std::vector<int> padded = assign;
    padded.push_back(0);
    auto region_policy = TabularPolicy::deterministic(6, 3, padded);
    double predicted = expected_return_exact(rm.mdp, region_policy);
    auto traj = rollout(nav.mdp, lift_policy(assign, nav.pi_b, rs), {0.05, 0.05}, 200, 1);
    REQUIRE(traj.terminated);
    CHECK(traj.total_reward() == doctest::Approx(predicted).epsilon(1e-6));
  }

  // The tabular overload reads the same actions from a policy table.
  auto via_table = lift_policy(TabularPolicy::deterministic(6, 3, {kEast, kEast, kEast, kSouth, kSouth, 0}),
                               nav.pi_b, rs);
  CHECK(via_table.act({0.05, 0.05}) == kEast);
  CHECK(via_table.act({0.15, 0.15}) == kEast);
}

TEST_CASE("region sets serialize with letter actions and raw bounds") {
  auto nav = make_nav_domain();
  auto rs = collect_default(nav, 7);
  Json j = rs.to_json();
  CHECK(j["goal_x"] == 0.95);
  REQUIRE(j["regions"].size() == 5);
  CHECK(j["regions"][1]["action_b"] == "E");
  CHECK(j["regions"][1]["action_e"] == "N");
  CHECK(j["regions"][1]["y_hi"] == grid(6));  // raw value, one ulp off 0.3
  CHECK(j["regions"][3]["desc"] == "0.1≤x<0.2, 0.3≤y<0.4");
  CHECK(j["regions"][0]["representative"]["x"] == 0.05);
}
