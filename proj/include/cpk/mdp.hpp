// mdp.hpp — environments, policies, trajectories, and return/outcome
// evaluation (exact linear-solve and seeded Monte Carlo).
//
// Undiscounted episodic setting: episodes run until an absorbing state is
// reached; a max-step guard converts non-termination into a detectable flag.
// Generic rollout/outcome code is templated over an Env providing
//   State, n_actions(), is_absorbing(s), valid_state(s), sample_next(s,a,rng),
//   most_probable_next(s,a), reward(s,a), state_repr(s)
// and a Policy providing argmax_action(s), prob(s,a), sample_action(s,rng).
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cpk/common.hpp"

#include <json.hpp>

namespace cpk {

using Json = nlohmann::json;

// ============================================================================
// Tabular MDP
// ============================================================================

struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  // transition[s][a][s'] = T(s'|s,a)
  std::vector<std::vector<std::vector<double>>> transition;
  // reward[s][a] = R(s,a)
  std::vector<std::vector<double>> reward;
  // initial_dist[s] = p0(s)
  std::vector<double> initial_dist;
  // absorbing[s] = true iff s is terminal
  std::vector<bool> absorbing;

  int max_steps = 1000;

  using State = int;

  bool is_absorbing(int s) const { return absorbing[std::size_t(s)]; }
  bool valid_state(int s) const { return s >= 0 && s < n_states; }
  double reward_at(int s, int a) const { return reward[std::size_t(s)][std::size_t(a)]; }

  int num_actions() const { return n_actions; }

  int sample_next(int s, int a, Rng& rng) const {
    return rng.sample_discrete(transition[std::size_t(s)][std::size_t(a)]);
  }

  /// Most probable next state; ties break toward the lowest index.
  int most_probable_next(int s, int a) const {
    const auto& row = transition[std::size_t(s)][std::size_t(a)];
    int best = 0;
    for (int sp = 1; sp < n_states; ++sp)
      if (row[std::size_t(sp)] > row[std::size_t(best)]) best = sp;
    return best;
  }

  double transition_prob(int s, int a, int sp) const {
    return transition[std::size_t(s)][std::size_t(a)][std::size_t(sp)];
  }

  std::string state_repr(int s) const { return "s" + std::to_string(s); }

  /// List of non-absorbing states (in index order).
  std::vector<int> transient_states() const;

  /// Checks the structural invariants (row sums, absorbing rewards, p0).
  void validate() const;

  Json to_json() const;
  static TabularMdp from_json(const Json& j);
};

// Env-interface aliases so templates can use one spelling.
struct TabularEnv {
  const TabularMdp& mdp;
  using State = int;
  int n_actions() const { return mdp.n_actions; }
  bool is_absorbing(int s) const { return mdp.is_absorbing(s); }
  bool valid_state(int s) const { return mdp.valid_state(s); }
  int sample_next(int s, int a, Rng& rng) const { return mdp.sample_next(s, a, rng); }
  int most_probable_next(int s, int a) const { return mdp.most_probable_next(s, a); }
  double transition_prob(int s, int a, int sp) const { return mdp.transition_prob(s, a, sp); }
  double reward(int s, int a) const { return mdp.reward_at(s, a); }
  std::string state_repr(int s) const { return mdp.state_repr(s); }
  int max_steps() const { return mdp.max_steps; }
};

// ============================================================================
// Policies
// ============================================================================

/// Stochastic tabular policy π(a|s); rows sum to 1.
struct TabularPolicy {
  std::vector<std::vector<double>> probs;  // [s][a]

  using State = int;

  /// Most probable action; ties break toward the lowest index.
  int argmax_action(int s) const {
    const auto& row = probs[std::size_t(s)];
    int best = 0;
    for (std::size_t a = 1; a < row.size(); ++a)
      if (row[a] > row[std::size_t(best)]) best = int(a);
    return best;
  }

  double prob(int s, int a) const { return probs[std::size_t(s)][std::size_t(a)]; }

  int sample_action(int s, Rng& rng) const {
    return rng.sample_discrete(probs[std::size_t(s)]);
  }

  int n_states() const { return int(probs.size()); }
  int n_actions() const { return probs.empty() ? 0 : int(probs[0].size()); }

  void validate() const;

  /// Deterministic policy from an action vector.
  static TabularPolicy deterministic(int n_states, int n_actions,
                                     const std::vector<int>& actions);

  Json to_json() const;
  static TabularPolicy from_json(const Json& j);
};

/// ε-soft wrapper: with probability 1−ε follow the base argmax, otherwise
/// pick uniformly. Used to generate exploratory behavioral batches.
struct EpsilonSoftPolicy {
  const TabularPolicy& base;
  double epsilon;

  using State = int;

  int argmax_action(int s) const { return base.argmax_action(s); }
  double prob(int s, int a) const {
    int n = base.n_actions();
    double uni = epsilon / double(n);
    return uni + (a == base.argmax_action(s) ? (1.0 - epsilon) : 0.0);
  }
  int sample_action(int s, Rng& rng) const {
    int n = base.n_actions();
    if (rng.uniform() < epsilon) return rng.uniform_int(n);
    return base.argmax_action(s);
  }
};

// ============================================================================
// Trajectories
// ============================================================================

template <typename State>
struct Trajectory {
  std::vector<State> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  bool terminated = false;

  std::size_t n_steps() const { return actions.size(); }
  double total_reward() const {
    double acc = 0.0;
    for (double r : rewards) acc += r;
    return acc;
  }
};

// ============================================================================
// Outcome functions
// ============================================================================

/// Phrase table for rendering a three-valued outcome verdict.
struct VerdictPhrases {
  std::string more;     // raw +1 (π_e's value is higher)
  std::string less;     // raw −1
  std::string unknown;  // raw 0
};

/// One user-defined outcome g(s,a): per-step value, an optional bonus added
/// once on absorption, a better-direction flag, and rendering phrases.
template <typename State>
struct OutcomeFn {
  std::string name;
  bool higher_is_better = true;
  std::function<double(const State&, int)> g;
  double terminal_bonus = 0.0;
  VerdictPhrases phrases;

  static VerdictPhrases default_phrases(const std::string& name) {
    return {"more " + name, "less " + name, "unknown change in " + name};
  }
};

template <typename State>
using OutcomeSet = std::vector<OutcomeFn<State>>;

/// Sum of g over a trajectory's (s,a) pairs, plus the terminal bonus when the
/// trajectory actually reached absorption.
template <typename State>
double outcome_total(const OutcomeFn<State>& fn, const Trajectory<State>& traj) {
  double acc = 0.0;
  for (std::size_t t = 0; t < traj.actions.size(); ++t)
    acc += fn.g(traj.states[t], traj.actions[t]);
  if (traj.terminated) acc += fn.terminal_bonus;
  return acc;
}

// ============================================================================
// Rollout (generic over Env and Policy)
// ============================================================================

/// Rolls out `policy` from s0 for at most max_steps. The seed fixes both
/// transition sampling and stochastic action sampling. Ends at an absorbing
/// state (terminated=true) or at max_steps (terminated=false).
template <typename Env, typename Policy>
Trajectory<typename Env::State> rollout(const Env& env, const Policy& policy,
                                        const typename Env::State& s0,
                                        int max_steps, std::uint64_t seed) {
  require(env.valid_state(s0), ErrorCode::InvalidState, "rollout: s0 out of range");
  require(!env.is_absorbing(s0), ErrorCode::InvalidState, "rollout: s0 is absorbing");
  Rng rng(derive_seed(seed, 0));
  Trajectory<typename Env::State> traj;
  traj.states.push_back(s0);
  auto s = s0;
  for (int t = 0; t < max_steps; ++t) {
    int a = policy.sample_action(s, rng);
    double r = env.reward(s, a);
    auto sp = env.sample_next(s, a, rng);
    traj.actions.push_back(a);
    traj.rewards.push_back(r);
    traj.states.push_back(sp);
    s = sp;
    if (env.is_absorbing(s)) {
      traj.terminated = true;
      break;
    }
  }
  return traj;
}

/// Monte-Carlo mean of each outcome over n_rollouts seeded rollouts.
/// Throws HorizonExceeded if any rollout fails to terminate.
template <typename Env, typename Policy>
std::vector<double> expected_outcomes_mc(const Env& env, const Policy& policy,
                                         const typename Env::State& s0,
                                         const OutcomeSet<typename Env::State>& outcomes,
                                         int n_rollouts, std::uint64_t seed) {
  require(n_rollouts >= 1, ErrorCode::InvalidConfig, "expected_outcomes_mc: n_rollouts >= 1");
  auto per = parallel_map<std::vector<double>>(n_rollouts, [&](int i) {
    auto traj = rollout(env, policy, s0, env.max_steps(), derive_seed(seed, std::uint64_t(i)));
    require(traj.terminated, ErrorCode::HorizonExceeded,
            "expected_outcomes_mc: rollout hit max_steps");
    std::vector<double> vals(outcomes.size());
    for (std::size_t m = 0; m < outcomes.size(); ++m)
      vals[m] = outcome_total(outcomes[m], traj);
    return vals;
  });
  std::vector<double> mean(outcomes.size(), 0.0);
  for (const auto& vals : per)
    for (std::size_t m = 0; m < vals.size(); ++m) mean[m] += vals[m];
  for (auto& v : mean) v /= double(n_rollouts);
  return mean;
}

/// Monte-Carlo mean return over n_rollouts seeded rollouts.
template <typename Env, typename Policy>
double expected_return_mc(const Env& env, const Policy& policy,
                          const typename Env::State& s0, int n_rollouts,
                          std::uint64_t seed) {
  auto per = parallel_map<double>(n_rollouts, [&](int i) {
    auto traj = rollout(env, policy, s0, env.max_steps(), derive_seed(seed, std::uint64_t(i)));
    require(traj.terminated, ErrorCode::HorizonExceeded,
            "expected_return_mc: rollout hit max_steps");
    return traj.total_reward();
  });
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc / double(n_rollouts);
}

// ============================================================================
// Exact tabular evaluation (linear solves)
// ============================================================================

/// V^π for every state (0 at absorbing states), by solving
/// V = R_π + T_π V over the transient block. Throws ImproperPolicy when the
/// policy-induced chain has an inescapable transient component.
std::vector<double> state_values(const TabularMdp& mdp, const TabularPolicy& policy);

/// J_π = p0 · V^π.
double expected_return_exact(const TabularMdp& mdp, const TabularPolicy& policy);

/// Expected total outcome G^π(s) for one outcome function at every state
/// (terminal bonus included; chains are proper so absorption is a.s.).
std::vector<double> state_outcomes_exact(const TabularMdp& mdp, const TabularPolicy& policy,
                                         const OutcomeFn<int>& outcome);

/// Expected outcomes from one start (exact linear solve per outcome).
std::vector<double> expected_outcomes_exact(const TabularMdp& mdp, const TabularPolicy& policy,
                                            int s0, const OutcomeSet<int>& outcomes);

/// Expected visit counts μ(s) = E[#visits to s] under p0 (normalized units),
/// by solving the transposed flow system.
std::vector<double> occupancy_mass(const TabularMdp& mdp, const TabularPolicy& policy);

/// True iff the policy-induced chain reaches absorption a.s. from every state.
bool is_proper(const TabularMdp& mdp, const TabularPolicy& policy);

/// Undiscounted value iteration to tolerance 1e-12. Returns optimal values
/// and a greedy deterministic policy (argmax ties toward the lowest action).
struct ValueIterationResult {
  std::vector<double> values;
  TabularPolicy policy;
  double optimal_return = 0.0;  // p0 · V*
};
ValueIterationResult value_iteration(const TabularMdp& mdp);

}  // namespace cpk
