// mdp.cpp — tabular MDP validation, serialization, and exact evaluation.

#include "cpk/mdp.hpp"

#include <algorithm>
#include <cmath>

#include "cpk/linalg.hpp"

namespace cpk {

// ============================================================================
// TabularMdp
// ============================================================================

std::vector<int> TabularMdp::transient_states() const {
  std::vector<int> out;
  for (int s = 0; s < n_states; ++s)
    if (!absorbing[std::size_t(s)]) out.push_back(s);
  return out;
}

void TabularMdp::validate() const {
  require(n_states >= 1 && n_actions >= 1, ErrorCode::InvalidConfig, "empty MDP");
  require(int(transition.size()) == n_states && int(reward.size()) == n_states &&
              int(initial_dist.size()) == n_states && int(absorbing.size()) == n_states,
          ErrorCode::DimensionMismatch, "MDP field sizes disagree");
  double p0_sum = 0.0;
  for (int s = 0; s < n_states; ++s) {
    require(int(transition[std::size_t(s)].size()) == n_actions &&
                int(reward[std::size_t(s)].size()) == n_actions,
            ErrorCode::DimensionMismatch, "per-state action dimensions disagree");
    for (int a = 0; a < n_actions; ++a) {
      const auto& row = transition[std::size_t(s)][std::size_t(a)];
      require(int(row.size()) == n_states, ErrorCode::DimensionMismatch,
              "transition row size");
      double sum = 0.0;
      for (double p : row) {
        require(p >= -1e-12, ErrorCode::InvalidConfig, "negative transition probability");
        sum += p;
      }
      require(std::fabs(sum - 1.0) <= 1e-9, ErrorCode::InvalidConfig,
              "transition row for (s" + std::to_string(s) + ",a" + std::to_string(a) +
                  ") sums to " + fmt_g17(sum));
      if (absorbing[std::size_t(s)])
        require(reward[std::size_t(s)][std::size_t(a)] == 0.0, ErrorCode::InvalidConfig,
                "absorbing state s" + std::to_string(s) + " has nonzero reward");
    }
    if (absorbing[std::size_t(s)])
      require(initial_dist[std::size_t(s)] == 0.0, ErrorCode::InvalidConfig,
              "p0 assigns mass to absorbing state s" + std::to_string(s));
    p0_sum += initial_dist[std::size_t(s)];
  }
  require(std::fabs(p0_sum - 1.0) <= 1e-9, ErrorCode::InvalidConfig,
          "p0 sums to " + fmt_g17(p0_sum));
}

Json TabularMdp::to_json() const {
  Json j;
  j["n_states"] = n_states;
  j["n_actions"] = n_actions;
  j["transition"] = transition;
  j["reward"] = reward;
  j["p0"] = initial_dist;
  std::vector<int> abs_list;
  for (int s = 0; s < n_states; ++s)
    if (absorbing[std::size_t(s)]) abs_list.push_back(s);
  j["absorbing"] = abs_list;
  return j;
}

TabularMdp TabularMdp::from_json(const Json& j) {
  TabularMdp m;
  try {
    m.n_states = j.at("n_states").get<int>();
    m.n_actions = j.at("n_actions").get<int>();
    m.transition = j.at("transition").get<std::vector<std::vector<std::vector<double>>>>();
    m.reward = j.at("reward").get<std::vector<std::vector<double>>>();
    m.initial_dist = j.at("p0").get<std::vector<double>>();
    m.absorbing.assign(std::size_t(m.n_states), false);
    for (int s : j.at("absorbing").get<std::vector<int>>()) {
      require(s >= 0 && s < m.n_states, ErrorCode::InvalidConfig, "absorbing index out of range");
      m.absorbing[std::size_t(s)] = true;
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("bad MDP JSON: ") + e.what());
  }
  m.validate();
  return m;
}

// ============================================================================
// TabularPolicy
// ============================================================================

void TabularPolicy::validate() const {
  for (std::size_t s = 0; s < probs.size(); ++s) {
    double sum = 0.0;
    for (double p : probs[s]) {
      require(p >= -1e-12, ErrorCode::InvalidConfig, "negative action probability");
      sum += p;
    }
    require(std::fabs(sum - 1.0) <= 1e-9, ErrorCode::InvalidConfig,
            "policy row " + std::to_string(s) + " sums to " + fmt_g17(sum));
  }
}

TabularPolicy TabularPolicy::deterministic(int n_states, int n_actions,
                                           const std::vector<int>& actions) {
  require(int(actions.size()) == n_states, ErrorCode::DimensionMismatch,
          "deterministic policy: action vector size");
  TabularPolicy p;
  p.probs.assign(std::size_t(n_states), std::vector<double>(std::size_t(n_actions), 0.0));
  for (int s = 0; s < n_states; ++s) {
    require(actions[std::size_t(s)] >= 0 && actions[std::size_t(s)] < n_actions,
            ErrorCode::InvalidConfig, "deterministic policy: action out of range");
    p.probs[std::size_t(s)][std::size_t(actions[std::size_t(s)])] = 1.0;
  }
  return p;
}

Json TabularPolicy::to_json() const {
  Json j;
  j["kind"] = "tabular";
  j["probs"] = probs;
  return j;
}

TabularPolicy TabularPolicy::from_json(const Json& j) {
  TabularPolicy p;
  try {
    require(j.at("kind").get<std::string>() == "tabular", ErrorCode::InvalidConfig,
            "policy JSON kind is not 'tabular'");
    p.probs = j.at("probs").get<std::vector<std::vector<double>>>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("bad policy JSON: ") + e.what());
  }
  p.validate();
  return p;
}

// ============================================================================
// Exact evaluation
// ============================================================================

namespace {

// Builds the transient-block system (I − T_π) x = rhs and solves it.
// rhs_fn(s) supplies the per-state right-hand side.
std::vector<double> solve_transient_system(const TabularMdp& mdp, const TabularPolicy& policy,
                                           const std::function<double(int)>& rhs_fn,
                                           bool transposed) {
  auto transient = mdp.transient_states();
  const std::size_t n = transient.size();
  std::vector<int> pos(std::size_t(mdp.n_states), -1);
  for (std::size_t i = 0; i < n; ++i) pos[std::size_t(transient[i])] = int(i);

  Matrix a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    int s = transient[i];
    a[i][i] += 1.0;
    for (int act = 0; act < mdp.n_actions; ++act) {
      double pa = policy.prob(s, act);
      if (pa == 0.0) continue;
      for (std::size_t jpos = 0; jpos < n; ++jpos) {
        int sp = transient[jpos];
        double tp = mdp.transition_prob(s, act, sp);
        if (tp == 0.0) continue;
        if (transposed)
          a[jpos][i] -= pa * tp;
        else
          a[i][jpos] -= pa * tp;
      }
    }
    b[i] = rhs_fn(s);
  }
  std::vector<double> x;
  try {
    x = solve_linear(std::move(a), std::move(b));
  } catch (const CpkError&) {
    fail(ErrorCode::ImproperPolicy, "policy-induced transient system is singular");
  }
  std::vector<double> full(std::size_t(mdp.n_states), 0.0);
  for (std::size_t i = 0; i < n; ++i) full[std::size_t(transient[i])] = x[i];
  return full;
}

double policy_mean(const TabularMdp& mdp, const TabularPolicy& policy, int s,
                   const std::function<double(int, int)>& f) {
  double acc = 0.0;
  for (int a = 0; a < mdp.n_actions; ++a) {
    double pa = policy.prob(s, a);
    if (pa != 0.0) acc += pa * f(s, a);
  }
  return acc;
}

}  // namespace

std::vector<double> state_values(const TabularMdp& mdp, const TabularPolicy& policy) {
  return solve_transient_system(
      mdp, policy,
      [&](int s) {
        return policy_mean(mdp, policy, s, [&](int ss, int a) { return mdp.reward_at(ss, a); });
      },
      /*transposed=*/false);
}

double expected_return_exact(const TabularMdp& mdp, const TabularPolicy& policy) {
  auto v = state_values(mdp, policy);
  double j = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) j += mdp.initial_dist[std::size_t(s)] * v[std::size_t(s)];
  return j;
}

std::vector<double> state_outcomes_exact(const TabularMdp& mdp, const TabularPolicy& policy,
                                         const OutcomeFn<int>& outcome) {
  auto g = solve_transient_system(
      mdp, policy,
      [&](int s) {
        return policy_mean(mdp, policy, s, [&](int ss, int a) { return outcome.g(ss, a); });
      },
      /*transposed=*/false);
  // Absorption happens a.s. for proper chains, so the bonus is a constant
  // offset on every transient start.
  if (outcome.terminal_bonus != 0.0)
    for (int s = 0; s < mdp.n_states; ++s)
      if (!mdp.is_absorbing(s)) g[std::size_t(s)] += outcome.terminal_bonus;
  return g;
}

std::vector<double> expected_outcomes_exact(const TabularMdp& mdp, const TabularPolicy& policy,
                                            int s0, const OutcomeSet<int>& outcomes) {
  require(mdp.valid_state(s0) && !mdp.is_absorbing(s0), ErrorCode::InvalidState,
          "expected_outcomes_exact: bad start state");
  std::vector<double> out(outcomes.size());
  for (std::size_t m = 0; m < outcomes.size(); ++m)
    out[m] = state_outcomes_exact(mdp, policy, outcomes[m])[std::size_t(s0)];
  return out;
}

std::vector<double> occupancy_mass(const TabularMdp& mdp, const TabularPolicy& policy) {
  return solve_transient_system(
      mdp, policy, [&](int s) { return mdp.initial_dist[std::size_t(s)]; },
      /*transposed=*/true);
}

bool is_proper(const TabularMdp& mdp, const TabularPolicy& policy) {
  try {
    state_values(mdp, policy);
    return true;
  } catch (const CpkError& e) {
    if (e.code() == ErrorCode::ImproperPolicy) return false;
    throw;
  }
}

ValueIterationResult value_iteration(const TabularMdp& mdp) {
  std::vector<double> v(std::size_t(mdp.n_states), 0.0);
  const int max_iters = 200000;
  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    double delta = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      if (mdp.is_absorbing(s)) continue;
      double best = -1e300;
      for (int a = 0; a < mdp.n_actions; ++a) {
        double q = mdp.reward_at(s, a);
        for (int sp = 0; sp < mdp.n_states; ++sp) {
          double tp = mdp.transition_prob(s, a, sp);
          if (tp != 0.0) q += tp * v[std::size_t(sp)];
        }
        if (q > best) best = q;
      }
      delta = std::max(delta, std::fabs(best - v[std::size_t(s)]));
      v[std::size_t(s)] = best;
    }
    if (delta < 1e-12) {
      converged = true;
      break;
    }
  }
  require(converged, ErrorCode::NumericalFailure, "value iteration did not converge");

  std::vector<int> actions(std::size_t(mdp.n_states), 0);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.is_absorbing(s)) continue;
    double best = -1e300;
    int best_a = 0;
    for (int a = 0; a < mdp.n_actions; ++a) {
      double q = mdp.reward_at(s, a);
      for (int sp = 0; sp < mdp.n_states; ++sp) {
        double tp = mdp.transition_prob(s, a, sp);
        if (tp != 0.0) q += tp * v[std::size_t(sp)];
      }
      if (q > best + 1e-12) {
        best = q;
        best_a = a;
      }
    }
    actions[std::size_t(s)] = best_a;
  }
  ValueIterationResult res;
  res.values = v;
  res.policy = TabularPolicy::deterministic(mdp.n_states, mdp.n_actions, actions);
  res.optimal_return = 0.0;
  for (int s = 0; s < mdp.n_states; ++s)
    res.optimal_return += mdp.initial_dist[std::size_t(s)] * v[std::size_t(s)];
  return res;
}

}  // namespace cpk
