// domains.cpp — canonical benchmark domains and reference baselines.

#include "cpk/domains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpk {

// ============================================================================
// Toy chain domain
// ============================================================================

namespace {

/// Deterministic successor table for the 12-state chain. Only s1 and s5
/// route differently per action; s0 disagrees on the action but not on the
/// successor.
int toy_next(int s, int a) {
  switch (s) {
    case 0: return 1;
    case 1: return a == 0 ? 3 : 2;
    case 2: return 3;
    case 3: return 4;
    case 4: return 5;
    case 5: return a == 0 ? 7 : 6;
    case 6: return 7;
    case 7: return 8;
    case 8: return 9;
    case 9: return 10;
    case 10: return 11;
    default: return 11;
  }
}

OutcomeSet<int> toy_outcomes() {
  OutcomeFn<int> length;
  length.name = "trajectory length";
  length.higher_is_better = false;
  length.g = [](const int&, int) { return 1.0; };
  length.terminal_bonus = 1.0;  // count the terminal state so length = #states
  length.phrases = {"longer trajectory", "shorter trajectory",
                    "unknown change in trajectory length"};

  OutcomeFn<int> visits;
  visits.name = "visits to desired states";
  visits.higher_is_better = true;
  visits.g = [](const int& s, int) { return (s == 2 || s == 6) ? 1.0 : 0.0; };
  visits.terminal_bonus = 0.0;
  visits.phrases = {"more visits to desired states", "fewer visits to desired states",
                    "unknown change in visits to desired states"};

  return {length, visits};
}

TabularMdp toy_base_mdp() {
  TabularMdp mdp;
  mdp.n_states = 12;
  mdp.n_actions = 2;
  mdp.transition.assign(12, std::vector<std::vector<double>>(
                                2, std::vector<double>(12, 0.0)));
  mdp.reward.assign(12, std::vector<double>(2, -0.001));
  mdp.initial_dist.assign(12, 0.0);
  mdp.absorbing.assign(12, false);
  mdp.absorbing[11] = true;

  for (int s = 0; s < 11; ++s)
    for (int a = 0; a < 2; ++a) mdp.transition[s][a][toy_next(s, a)] = 1.0;
  for (int a = 0; a < 2; ++a) {
    mdp.transition[11][a][11] = 1.0;
    mdp.reward[11][a] = 0.0;
  }

  mdp.reward[1][1] = 1.0;
  mdp.reward[5][1] = 3.0;
  mdp.reward[9][0] = 5.0;
  mdp.reward[10][0] = 5.0;

  for (int s = 0; s < 11; ++s) mdp.initial_dist[s] = 1.0 / 11.0;
  return mdp;
}

}  // namespace

ToyDomain make_toy_mdp() {
  ToyDomain dom;
  dom.mdp = toy_base_mdp();
  dom.mdp.validate();

  std::vector<int> b(12, 0);
  dom.pi_b = TabularPolicy::deterministic(12, 2, b);

  std::vector<int> e(12, 0);
  e[0] = e[1] = e[5] = 1;
  dom.pi_e = TabularPolicy::deterministic(12, 2, e);

  dom.outcomes = toy_outcomes();
  return dom;
}

ToyDomain make_slip_toy(double slip) {
  require(slip >= 0.0 && slip < 1.0, ErrorCode::InvalidConfig,
          "make_slip_toy: slip must be in [0, 1)");
  ToyDomain dom = make_toy_mdp();
  for (int s = 0; s < 11; ++s)
    for (int a = 0; a < 2; ++a) {
      auto& row = dom.mdp.transition[s][a];
      std::fill(row.begin(), row.end(), 0.0);
      row[toy_next(s, a)] = 1.0 - slip;
      row[s] += slip;  // slip keeps the agent in place
    }
  dom.mdp.validate();
  return dom;
}

TabularPolicy make_epsilon_soft(const TabularPolicy& base, double epsilon) {
  require(epsilon >= 0.0 && epsilon <= 1.0, ErrorCode::InvalidConfig,
          "make_epsilon_soft: epsilon must be in [0, 1]");
  base.validate();
  const int n = base.n_states();
  const int a_count = base.n_actions();
  TabularPolicy soft;
  soft.probs.assign(std::size_t(n), std::vector<double>(std::size_t(a_count),
                                                        epsilon / double(a_count)));
  for (int s = 0; s < n; ++s)
    soft.probs[std::size_t(s)][std::size_t(base.argmax_action(s))] += 1.0 - epsilon;
  return soft;
}

// ============================================================================
// Box-navigation domain
// ============================================================================

NavDomain make_nav_domain() {
  NavDomain dom;

  dom.mdp.step_size = 0.1;
  dom.mdp.step_cost = -0.001;
  dom.mdp.goal_x = 0.95;
  dom.mdp.goal_reward = 10.0;
  dom.mdp.boxes = {
      {0.1, 0.2, 0.0, 0.1, 4.0},
      {0.2, 0.3, 0.1, 0.2, 3.0},
      {0.0, 0.1, 0.3, 0.4, 5.0},
      {0.5, 0.6, 0.3, 0.4, 7.0},
  };
  dom.mdp.start_lo = {0.0, 0.0};
  dom.mdp.start_hi = {0.1, 0.1};

  // Behavior policy: dive south through the two reward corridors when high,
  // climb north while low, otherwise head east toward the goal.
  dom.pi_b.rules = {
      {{cond_range(0, 0.1, 0.2), cond_ge(1, 0.3)}, kSouth},
      {{cond_range(0, 0.4, 0.5), cond_ge(1, 0.3)}, kSouth},
      {{cond_lt(1, 0.2)}, kNorth},
  };
  dom.pi_b.default_action = kEast;

  // First alternative: leave the start box eastward and skip the first
  // northward climb; identical to the behavior policy elsewhere.
  dom.pi_e1.rules = {
      {{cond_range(0, 0.0, 0.1), cond_range(1, 0.0, 0.1)}, kEast},
      {{cond_range(0, 0.1, 0.2), cond_range(1, 0.1, 0.2)}, kEast},
      {{cond_range(0, 0.1, 0.2), cond_ge(1, 0.3)}, kSouth},
      {{cond_range(0, 0.4, 0.5), cond_ge(1, 0.3)}, kSouth},
      {{cond_lt(1, 0.2)}, kNorth},
  };
  dom.pi_e1.default_action = kEast;

  // Second alternative: keep climbing through the left column one band
  // higher; never dives south.
  dom.pi_e2.rules = {
      {{cond_range(0, 0.0, 0.1), cond_range(1, 0.2, 0.3)}, kNorth},
      {{cond_lt(1, 0.2)}, kNorth},
  };
  dom.pi_e2.default_action = kEast;

  OutcomeFn<Vec2> stay;
  stay.name = "desired-region stay";
  stay.higher_is_better = true;
  stay.g = [](const Vec2& p, int) { return (p.y >= 0.2 && p.y < 0.3) ? 1.0 : 0.0; };
  stay.terminal_bonus = 0.0;
  stay.phrases = {"more stay in the desired region (0.2≤y<0.3)",
                  "less stay in the desired region (0.2≤y<0.3)",
                  "unknown change in stay in the desired region (0.2≤y<0.3)"};

  OutcomeFn<Vec2> reward;
  reward.name = "collected rewards";
  reward.higher_is_better = true;
  reward.g = [m = dom.mdp](const Vec2& p, int a) { return m.reward(p, a); };
  reward.terminal_bonus = 0.0;
  reward.phrases = {"more collected rewards", "less collected rewards",
                    "unknown change in collected rewards"};

  dom.outcomes = {stay, reward};
  return dom;
}

// ============================================================================
// Policy-iteration baseline
// ============================================================================

namespace {

double policy_cost(const TabularMdp& mdp, const TabularPolicy& policy,
                   const Matrix& cost, double flow_scale) {
  auto mass = occupancy_mass(mdp, policy);
  double acc = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.is_absorbing(s)) continue;
    acc += mass[std::size_t(s)] * cost[std::size_t(s)][std::size_t(policy.argmax_action(s))];
  }
  return flow_scale * acc;
}

double start_count(const TabularMdp& mdp) {
  double n = 0.0;
  for (double p : mdp.initial_dist)
    if (p > 0.0) n += 1.0;
  return n;
}

}  // namespace

std::vector<ImprovementStep> policy_iteration_trace(
    const TabularMdp& mdp, const TabularPolicy& pi_b,
    const std::vector<std::vector<char>>* allowed) {
  mdp.validate();
  pi_b.validate();
  require(pi_b.n_states() == mdp.n_states && pi_b.n_actions() == mdp.n_actions,
          ErrorCode::DimensionMismatch, "policy_iteration_trace: policy shape");
  if (allowed != nullptr)
    require(int(allowed->size()) == mdp.n_states, ErrorCode::DimensionMismatch,
            "policy_iteration_trace: allowed mask shape");

  std::vector<int> acts(std::size_t(mdp.n_states), 0);
  for (int s = 0; s < mdp.n_states; ++s) acts[std::size_t(s)] = pi_b.argmax_action(s);
  if (allowed != nullptr)
    for (int s : mdp.transient_states())
      require((*allowed)[std::size_t(s)][std::size_t(acts[std::size_t(s)])] != 0,
              ErrorCode::InvalidConfig,
              "policy_iteration_trace: baseline action masked out at " + mdp.state_repr(s));

  const auto cost = deviation_cost(mdp, pi_b);
  const double flow_scale = start_count(mdp);
  const auto base_acts = acts;

  std::vector<ImprovementStep> trace;
  auto record = [&](const std::vector<int>& av) {
    ImprovementStep step;
    step.policy = TabularPolicy::deterministic(mdp.n_states, mdp.n_actions, av);
    step.expected_return = expected_return_exact(mdp, step.policy);
    step.expected_cost = policy_cost(mdp, step.policy, cost, flow_scale);
    step.changed_states = 0;
    for (int s : mdp.transient_states())
      if (av[std::size_t(s)] != base_acts[std::size_t(s)]) ++step.changed_states;
    return step;
  };
  trace.push_back(record(acts));

  const double kGainTol = 1e-10;
  for (;;) {
    auto cur = TabularPolicy::deterministic(mdp.n_states, mdp.n_actions, acts);
    auto values = state_values(mdp, cur);
    auto q_of = [&](int s, int a) {
      double q = mdp.reward_at(s, a);
      for (int sp = 0; sp < mdp.n_states; ++sp)
        q += mdp.transition_prob(s, a, sp) * values[std::size_t(sp)];
      return q;
    };

    double best_gain = kGainTol;
    int best_s = -1, best_a = -1;
    for (int s : mdp.transient_states()) {
      double q_cur = q_of(s, acts[std::size_t(s)]);
      for (int a = 0; a < mdp.n_actions; ++a) {
        if (a == acts[std::size_t(s)]) continue;
        if (allowed != nullptr && (*allowed)[std::size_t(s)][std::size_t(a)] == 0) continue;
        double gain = q_of(s, a) - q_cur;
        if (gain > best_gain) {
          best_gain = gain;
          best_s = s;
          best_a = a;
        }
      }
    }
    if (best_s < 0) break;
    acts[std::size_t(best_s)] = best_a;
    trace.push_back(record(acts));
  }
  return trace;
}

// ============================================================================
// Exhaustive search oracle
// ============================================================================

ExhaustiveBest brute_force_cmdp(const TabularMdp& mdp, const Matrix& cost,
                                double kappa,
                                const std::vector<std::vector<char>>* allowed) {
  mdp.validate();
  require(kappa >= 0.0, ErrorCode::InvalidConfig, "brute_force_cmdp: kappa >= 0");
  require(int(cost.size()) == mdp.n_states, ErrorCode::DimensionMismatch,
          "brute_force_cmdp: cost shape");

  const auto transient = mdp.transient_states();
  std::vector<std::vector<int>> choices;
  choices.reserve(transient.size());
  double total = 1.0;
  for (int s : transient) {
    std::vector<int> opts;
    for (int a = 0; a < mdp.n_actions; ++a)
      if (allowed == nullptr || (*allowed)[std::size_t(s)][std::size_t(a)] != 0)
        opts.push_back(a);
    require(!opts.empty(), ErrorCode::InvalidConfig,
            "brute_force_cmdp: no allowed action at " + mdp.state_repr(s));
    total *= double(opts.size());
    require(total <= 1e7, ErrorCode::TooLarge,
            "brute_force_cmdp: enumeration exceeds 10^7 policies");
    choices.push_back(opts);
  }

  const double flow_scale = start_count(mdp);
  std::vector<std::size_t> idx(transient.size(), 0);
  bool found = false;
  ExhaustiveBest best;

  for (;;) {
    std::vector<int> av(std::size_t(mdp.n_states), 0);
    for (std::size_t i = 0; i < transient.size(); ++i)
      av[std::size_t(transient[i])] = choices[i][idx[i]];
    auto policy = TabularPolicy::deterministic(mdp.n_states, mdp.n_actions, av);
    bool usable = true;
    double ret = 0.0, c = 0.0;
    try {
      ret = expected_return_exact(mdp, policy);
      c = policy_cost(mdp, policy, cost, flow_scale);
    } catch (const CpkError& err) {
      if (err.code() == ErrorCode::ImproperPolicy || err.code() == ErrorCode::NumericalFailure)
        usable = false;  // the policy traps mass away from absorption
      else
        throw;
    }
    if (usable && c <= kappa + 1e-9 && (!found || ret > best.expected_return)) {
      found = true;
      best.policy = policy;
      best.expected_return = ret;
      best.expected_cost = c;
    }

    // Lexicographic odometer over transient action choices, last state fastest.
    std::size_t pos = transient.size();
    while (pos > 0) {
      std::size_t i = pos - 1;
      if (++idx[i] < choices[i].size()) break;
      idx[i] = 0;
      --pos;
    }
    if (pos == 0) break;  // wrapped around: every assignment has been tried
  }

  require(found, ErrorCode::Infeasible, "brute_force_cmdp: no feasible proper policy");
  return best;
}

}  // namespace cpk
