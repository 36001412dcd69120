// divergence.hpp — locating the states where two policies behave differently.
//
// A state is "diverging" when the two policies' most probable actions differ
// (or their probabilities do, beyond kappa_pi) AND the induced most probable
// next states differ (or their probabilities do, beyond kappa_T). Collection
// comes in two flavors: an online branching rollout that splits into the
// other policy at each newly-found diverging state (up to a depth limit),
// and a batch scan over a fixed state sample.
//
// Works over any Env/Policy pair matching the interface described in
// mdp.hpp; everything here is deterministic given the seed.
#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cpk/common.hpp"

namespace cpk {

struct DivergenceConfig {
  double kappa_pi = 0.1;  // action-probability gap threshold
  double kappa_T = 0.1;   // next-state-probability gap threshold
  int d_max = 3;          // trajectory split-depth limit (1 = never split)

  void validate() const {
    require(kappa_pi >= 0.0 && kappa_pi <= 1.0 && kappa_T >= 0.0 && kappa_T <= 1.0,
            ErrorCode::InvalidConfig, "kappa thresholds must lie in [0,1]");
    require(d_max >= 1, ErrorCode::InvalidConfig, "d_max must be >= 1");
  }
};

// ============================================================================
// Labeled state sets
// ============================================================================

template <class State>
struct LabeledEntry {
  State state{};
  int label = 0;      // 0 = non-diverging; k >= 1 indexes an action pair
  int action_b = -1;  // argmax actions at this state (valid when label > 0)
  int action_e = -1;
};

/// States in first-visit order with divergence labels. Labels are dense from
/// 1, one per distinct (action_b, action_e) pair, in order of first
/// appearance.
template <class State>
struct LabeledStateSet {
  std::vector<LabeledEntry<State>> entries;
  std::map<std::pair<int, int>, int> action_pair_index;

  bool contains(const State& s) const {
    for (const auto& e : entries)
      if (e.state == s) return true;
    return false;
  }

  /// Dense label for an action pair, assigning the next id on first use.
  int label_for(int a_b, int a_e) {
    auto key = std::make_pair(a_b, a_e);
    auto it = action_pair_index.find(key);
    if (it != action_pair_index.end()) return it->second;
    int k = int(action_pair_index.size()) + 1;
    action_pair_index.emplace(key, k);
    return k;
  }

  int n_diverging() const {
    int n = 0;
    for (const auto& e : entries) n += e.label > 0 ? 1 : 0;
    return n;
  }

  /// CSV with header state_repr,label,action_b,action_e (one row per entry).
  template <class ReprFn>
  std::string to_csv(ReprFn&& repr) const {
    std::string out = "state_repr,label,action_b,action_e\n";
    for (const auto& e : entries) {
      out += "\"" + repr(e.state) + "\"," + std::to_string(e.label) + "," +
             std::to_string(e.action_b) + "," + std::to_string(e.action_e) + "\n";
    }
    return out;
  }
};

// ============================================================================
// The diverging-state test
// ============================================================================

/// True iff BOTH hold at s (absorbing states are never diverging):
///   1. a_b != a_e, or |pi_b(a_b|s) - pi_e(a_e|s)| > kappa_pi
///   2. s'_b != s'_e, or |T(s'_b|s,a_b) - T(s'_e|s,a_e)| > kappa_T
/// with a_b/a_e the argmax actions (ties to the lowest index) and s'_b/s'_e
/// the most probable next states under those actions. For deterministic
/// dynamics both probabilities are 1, so condition 2 reduces to s'_b != s'_e.
template <class Env, class PolicyB, class PolicyE>
bool is_diverging(const typename Env::State& s, const PolicyB& pi_b, const PolicyE& pi_e,
                  const Env& env, const DivergenceConfig& cfg = {}) {
  cfg.validate();
  if (env.is_absorbing(s)) return false;
  int a_b = pi_b.argmax_action(s);
  int a_e = pi_e.argmax_action(s);
  bool cond1 =
      a_b != a_e || std::abs(pi_b.prob(s, a_b) - pi_e.prob(s, a_e)) > cfg.kappa_pi;
  if (!cond1) return false;
  auto sb = env.most_probable_next(s, a_b);
  auto se = env.most_probable_next(s, a_e);
  bool cond2 = !(sb == se) ||
               std::abs(env.transition_prob(s, a_b, sb) - env.transition_prob(s, a_e, se)) >
                   cfg.kappa_T;
  return cond2;
}

// ============================================================================
// Online branching collection
// ============================================================================

namespace detail {

template <class Env, class PolicyB, class PolicyE>
struct DivergenceCollector {
  const Env& env;
  const PolicyB& pi_b;
  const PolicyE& pi_e;
  DivergenceConfig cfg;
  LabeledStateSet<typename Env::State> out;
  std::set<typename Env::State> seen;

  // Records s on first encounter; returns true exactly then.
  bool record(const typename Env::State& s) {
    if (seen.count(s)) return false;
    seen.insert(s);
    LabeledEntry<typename Env::State> e;
    e.state = s;
    if (is_diverging(s, pi_b, pi_e, env, cfg)) {
      e.action_b = pi_b.argmax_action(s);
      e.action_e = pi_e.argmax_action(s);
      e.label = out.label_for(e.action_b, e.action_e);
    }
    out.entries.push_back(e);
    return true;
  }

  // One trajectory segment from s. `swapped` selects which policy drives it;
  // labels always stay oriented as (pi_b, pi_e). At a newly-found diverging
  // state below the depth limit the trajectory splits: a branch follows the
  // other policy while this one continues, both one level deeper. Branch
  // seeds derive from (segment seed, step index) so the parent's random
  // stream is untouched and collections nest as d_max grows.
  void run(typename Env::State s, int depth, bool swapped, std::uint64_t seed) {
    Rng rng(seed);
    for (int t = 0; t < env.max_steps(); ++t) {
      if (env.is_absorbing(s)) {
        record(s);
        return;
      }
      // Re-encountered states never split again, so only a first encounter
      // (when the freshly appended entry is s's) can open a branch.
      bool first = record(s);
      bool diverging_here = first && out.entries.back().label > 0;
      if (diverging_here && depth < cfg.d_max) {
        run(s, depth + 1, !swapped, derive_seed(seed, std::uint64_t(t) + 1));
        ++depth;  // continuing trajectory is the split's other child
      }
      int a = swapped ? pi_e.sample_action(s, rng) : pi_b.sample_action(s, rng);
      s = env.sample_next(s, a, rng);
    }
    require(env.is_absorbing(s), ErrorCode::HorizonExceeded,
            "diverging-state rollout exceeded max_steps");
    record(s);
  }
};

}  // namespace detail

/// Branching rollout collection: follows pi_b from s0, splitting into the
/// other policy at each first-encountered diverging state while the depth
/// allows (depth starts at 1; with d_max=1 nothing ever splits). All visited
/// states are recorded, diverging or not.
template <class Env, class PolicyB, class PolicyE>
LabeledStateSet<typename Env::State> collect_diverging_states(
    const PolicyB& pi_b, const PolicyE& pi_e, const Env& env,
    const typename Env::State& s0, const DivergenceConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  require(env.valid_state(s0), ErrorCode::InvalidState, "collect: s0 invalid");
  require(!env.is_absorbing(s0), ErrorCode::InvalidState, "collect: s0 is absorbing");
  detail::DivergenceCollector<Env, PolicyB, PolicyE> col{env, pi_b, pi_e, cfg, {}, {}};
  col.run(s0, 1, false, derive_seed(seed, 0));
  return std::move(col.out);
}

/// Batch variant: labels every distinct state in `batch` (first occurrence
/// wins; order preserved) using the diverging-state test directly.
template <class Env, class PolicyB, class PolicyE>
LabeledStateSet<typename Env::State> collect_diverging_states_batch(
    const PolicyB& pi_b, const PolicyE& pi_e,
    const std::vector<typename Env::State>& batch, const Env& env,
    const DivergenceConfig& cfg = {}) {
  cfg.validate();
  require(!batch.empty(), ErrorCode::EmptyBatch, "batch collection: empty batch");
  LabeledStateSet<typename Env::State> out;
  std::set<typename Env::State> seen;
  for (const auto& s : batch) {
    if (seen.count(s)) continue;
    seen.insert(s);
    LabeledEntry<typename Env::State> e;
    e.state = s;
    if (is_diverging(s, pi_b, pi_e, env, cfg)) {
      e.action_b = pi_b.argmax_action(s);
      e.action_e = pi_e.argmax_action(s);
      e.label = out.label_for(e.action_b, e.action_e);
    }
    out.entries.push_back(e);
  }
  return out;
}

}  // namespace cpk
