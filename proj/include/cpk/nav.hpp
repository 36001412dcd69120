// nav.hpp — deterministic box-world navigation environment on the unit
// square, with piecewise-rule policies.
//
// States are exact coordinate pairs; moves add ±0.1 to one coordinate with no
// snapping, so repeated moves accumulate ordinary floating-point error and
// region predicates use half-open intervals to avoid boundary double-counting.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cpk/common.hpp"
#include "cpk/mdp.hpp"

namespace cpk {

// ============================================================================
// State and actions
// ============================================================================

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
  bool operator<(const Vec2& o) const { return x < o.x || (x == o.x && y < o.y); }
};

enum NavAction : int { kEast = 0, kNorth = 1, kSouth = 2 };

/// Short action names for serialization ("E"/"N"/"S").
const char* nav_action_name(int a);
/// Lowercase words for rendered explanations ("east"/"north"/"south").
const char* nav_action_word(int a);

// ============================================================================
// Environment
// ============================================================================

/// Axis-aligned reward box, half-open in both coordinates.
struct RewardBox {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  double value = 0.0;
  bool contains(const Vec2& p) const {
    return p.x >= x_lo && p.x < x_hi && p.y >= y_lo && p.y < y_hi;
  }
};

/// Deterministic navigation MDP: actions E/N/S move by `step_size`; the
/// episode ends when x exceeds `goal_x`. Rewards are evaluated at the arrival
/// state: goal first, then reward boxes in listed priority order, else the
/// step cost.
struct BoxNavMdp {
  double step_size = 0.1;
  double step_cost = -0.001;
  double goal_x = 0.95;
  double goal_reward = 10.0;
  std::vector<RewardBox> boxes;
  Vec2 start_lo{0.0, 0.0};
  Vec2 start_hi{0.1, 0.1};
  int max_steps_cap = 200;

  using State = Vec2;

  int n_actions() const { return 3; }
  int max_steps() const { return max_steps_cap; }

  bool is_absorbing(const Vec2& p) const { return p.x > goal_x; }
  bool valid_state(const Vec2& p) const { return std::isfinite(p.x) && std::isfinite(p.y); }

  Vec2 step(const Vec2& p, int a) const {
    Vec2 q = p;
    switch (a) {
      case kEast: q.x += step_size; break;
      case kNorth: q.y += step_size; break;
      case kSouth: q.y -= step_size; break;
      default: fail(ErrorCode::InvalidConfig, "nav action out of range");
    }
    return q;
  }

  Vec2 sample_next(const Vec2& p, int a, Rng&) const { return step(p, a); }
  Vec2 most_probable_next(const Vec2& p, int a) const { return step(p, a); }
  double transition_prob(const Vec2& p, int a, const Vec2& q) const {
    return step(p, a) == q ? 1.0 : 0.0;
  }

  double reward_at(const Vec2& p) const {
    if (is_absorbing(p)) return goal_reward;
    for (const auto& box : boxes)
      if (box.contains(p)) return box.value;
    return step_cost;
  }

  double reward(const Vec2& p, int a) const { return reward_at(step(p, a)); }

  std::string state_repr(const Vec2& p) const {
    return "(" + fmt_g17(p.x) + "," + fmt_g17(p.y) + ")";
  }

  /// Uniform draw from the initial box.
  Vec2 sample_start(Rng& rng) const {
    return {start_lo.x + (start_hi.x - start_lo.x) * rng.uniform(),
            start_lo.y + (start_hi.y - start_lo.y) * rng.uniform()};
  }
};

// ============================================================================
// Piecewise-rule policies
// ============================================================================

/// One interval condition on a coordinate; missing bounds are unbounded.
/// Bounded intervals are half-open: lo <= value < hi.
struct IntervalCond {
  int feature = 0;  // 0 = x, 1 = y
  bool has_lo = false;
  double lo = 0.0;
  bool has_hi = false;
  double hi = 0.0;

  bool matches(const Vec2& p) const {
    double v = feature == 0 ? p.x : p.y;
    if (has_lo && v < lo) return false;
    if (has_hi && v >= hi) return false;
    return true;
  }
};

struct PolicyRule {
  std::vector<IntervalCond> conds;  // conjunction
  int action = 0;

  bool matches(const Vec2& p) const {
    for (const auto& c : conds)
      if (!c.matches(p)) return false;
    return true;
  }
};

/// Ordered first-match-wins rule policy with a default action. Deterministic.
struct RulePolicy {
  std::vector<PolicyRule> rules;
  int default_action = 0;

  using State = Vec2;

  int act(const Vec2& p) const {
    for (const auto& r : rules)
      if (r.matches(p)) return r.action;
    return default_action;
  }

  int argmax_action(const Vec2& p) const { return act(p); }
  double prob(const Vec2& p, int a) const { return act(p) == a ? 1.0 : 0.0; }
  int sample_action(const Vec2& p, Rng&) const { return act(p); }

  Json to_json() const;
  static RulePolicy from_json(const Json& j);
};

/// Convenience builders for interval conditions.
IntervalCond cond_ge(int feature, double lo);
IntervalCond cond_lt(int feature, double hi);
IntervalCond cond_range(int feature, double lo, double hi);

}  // namespace cpk
