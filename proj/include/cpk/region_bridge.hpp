// region_bridge.hpp — discretizes a navigation MDP into a small tabular MDP
// over the boxes where a behavior policy and candidate policies disagree, and
// lifts tabular solutions back to piecewise-rule navigation policies.
//
// Pipeline: collect_regions finds the disagreement boxes by branching rollouts
// plus rule learning; build_region_trajectories generates the rollouts that
// cover every (region, action) pair; build_region_mdp estimates count-based
// transitions and summed inter-region rewards from those rollouts; lift_policy
// turns a tabular action assignment over regions into a RulePolicy.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpk/divergence.hpp"
#include "cpk/mdp.hpp"
#include "cpk/nav.hpp"
#include "cpk/rule_learner.hpp"

namespace cpk {

// ============================================================================
// Region geometry
// ============================================================================

/// One axis-aligned disagreement box (half-open on both axes).
struct Region {
  int label = 0;            // index in the sorted region list
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  std::string desc;         // "0.1≤x<0.2, 0.3≤y<0.4"
  Vec2 representative;      // first collected disagreement state inside the box
  int action_b = 0;         // behavior policy action at the representative
  int action_e = 0;         // candidate action at the representative (provenance)

  bool contains(const Vec2& p) const {
    return p.x >= x_lo && p.x < x_hi && p.y >= y_lo && p.y < y_hi;
  }
  Json to_json() const;
};

/// Disjoint regions sorted by (x_lo, y_lo), plus the goal predicate.
struct RegionSet {
  std::vector<Region> regions;
  double goal_x = 0.95;  // absorbing once x > goal_x

  int size() const { return int(regions.size()); }
  /// Index of the region containing p, or -1 when p lies in none.
  int region_of(const Vec2& p) const;
  Json to_json() const;
};

/// Readable box description in the same style as learned-rule descriptions.
std::string desc_from_box(double x_lo, double x_hi, double y_lo, double y_hi);

// ============================================================================
// Collection
// ============================================================================

struct RegionCollectConfig {
  DivergenceConfig divergence;   // branching depth and gap thresholds
  int n_start_draws = 32;        // random starts in addition to the canonical one
  double grid = 0.05;            // feature-threshold spacing for the rule learner
  RuleBudget budget;             // clause budget for the per-candidate classifier
  Vec2 canonical_start{0.05, 0.05};
};

/// Compares the behavior policy against every candidate via branching rollouts
/// from the canonical start plus `n_start_draws` uniform draws, learns a box
/// description per disagreement class, and returns the de-overlapped union of
/// all boxes. Candidates that never disagree contribute nothing.
RegionSet collect_regions(const RulePolicy& pi_b, const std::vector<RulePolicy>& candidates,
                          const BoxNavMdp& mdp, const RegionCollectConfig& cfg,
                          std::uint64_t seed);

// ============================================================================
// Trajectory harness and tabular construction
// ============================================================================

/// Rollouts feeding the tabular estimate. `main` holds the behavior policy and
/// each candidate from the canonical start (these define the tabular initial
/// distribution); `probes` hold one rollout per (region, action) pair, started
/// at the region's representative with that action forced inside the region.
struct RegionTrajectories {
  std::vector<Trajectory<Vec2>> main;
  std::vector<Trajectory<Vec2>> probes;
};

RegionTrajectories build_region_trajectories(const BoxNavMdp& mdp, const RulePolicy& pi_b,
                                             const std::vector<RulePolicy>& candidates,
                                             const RegionSet& rs,
                                             const RegionCollectConfig& cfg);

/// Tabular MDP over regions: states 0..K-1 are the regions in label order and
/// state K absorbs. Transition counts come from region entries; rewards sum
/// everything from entering a region (leaving step included) until the next
/// region entry or absorption.
struct RegionMdp {
  TabularMdp mdp;
  RegionSet regions;
  std::vector<int> action_b;                // behavior action per region
  std::vector<std::vector<long>> samples;   // [region][action] segment counts
  std::vector<std::vector<char>> covered;   // [region][action] has >= 1 segment

  int absorbing_state() const { return regions.size(); }
};

/// Estimates the tabular model from rollouts. Uncovered (region, action) pairs
/// become flagged self-loops with zero reward; a region with no covered action
/// at all raises NoCoverage. The initial distribution is the frequency of the
/// first-entered region over `main` rollouts.
RegionMdp build_region_mdp(const RegionTrajectories& trajs, const RegionSet& rs);

// ============================================================================
// Lifting
// ============================================================================

/// Piecewise policy: inside region k take region_actions[k], elsewhere follow
/// the behavior policy (its rules keep their order after the region rules).
RulePolicy lift_policy(const std::vector<int>& region_actions, const RulePolicy& pi_b,
                       const RegionSet& rs);

/// Same, reading the action per region from a tabular policy over the region
/// MDP's states (the absorbing row is ignored).
RulePolicy lift_policy(const TabularPolicy& region_policy, const RulePolicy& pi_b,
                       const RegionSet& rs);

}  // namespace cpk
