// outcome_eval.hpp — expected-outcome estimation with uncertainty.
//
// Given behavioral data collected under one policy, estimate what another
// policy's long-term outcomes would be: fit an empirical tabular dynamics
// model, bootstrap it (resample trajectories -> refit -> Monte-Carlo
// rollouts) to get percentile confidence intervals, and reduce interval
// comparisons to per-outcome verdicts in {+1, -1, 0}.
#pragma once

#include <vector>

#include "cpk/common.hpp"
#include "cpk/mdp.hpp"

namespace cpk {

/// Empirical dynamics fitted from trajectories. `observed[s][a]` marks
/// state-action pairs actually present in the data; unobserved pairs default
/// to a zero-reward self-loop, and downstream consumers treat any rollout
/// that traverses one as unreliable.
struct DynamicsEstimate {
  TabularMdp mdp;
  std::vector<std::vector<char>> observed;

  bool fully_observed() const {
    for (const auto& row : observed)
      for (char c : row)
        if (!c) return false;
    return true;
  }
};

/// Count-ratio dynamics estimate. Dimensions are inferred from the batch
/// when left at -1. States that only ever appear as terminal endpoints
/// become absorbing.
DynamicsEstimate fit_dynamics(const std::vector<Trajectory<int>>& batch, int n_states = -1,
                              int n_actions = -1);

/// Bootstrap summary of a policy's expected outcomes from one start state.
struct OutcomeEstimate {
  std::vector<double> point;  // mean over bootstrap replicates
  std::vector<double> lower;  // percentile interval at ci_level
  std::vector<double> upper;
  int n_bootstrap = 0;
  double ci_level = 0.0;
  // True when any replicate's rollouts traversed an unobserved (s,a) pair or
  // were truncated at the horizon; comparisons then refuse to take sides.
  bool unreliable = false;

  Json to_json() const;
  static OutcomeEstimate from_json(const Json& j);
};

/// Model-based bootstrap: B times, resample the batch with replacement, refit
/// the dynamics, and evaluate `policy_e` from s0 by n_rollouts Monte-Carlo
/// rollouts per outcome. Point = mean of replicate means; interval =
/// empirical (1 +- ci_level)/2 percentiles (widened to include the point in
/// degenerate skewed cases). Deterministic given the seed; replicates run
/// concurrently.
OutcomeEstimate bootstrap_outcome_ci(const std::vector<Trajectory<int>>& batch,
                                     const TabularPolicy& policy_e, int s0,
                                     const OutcomeSet<int>& outcomes, int B = 200,
                                     int n_rollouts = 100, double ci_level = 0.95,
                                     std::uint64_t seed = 0);

/// Per-outcome comparison of a known baseline value against an interval
/// estimate. raw[m]: +1 when point_b[m] < lower[m] (the evaluated policy's
/// outcome is credibly larger), -1 when point_b[m] > upper[m], else 0.
/// oriented[m] flips the sign for lower-is-better outcomes so +1 always
/// means "the evaluated policy is better"; an unreliable estimate forces
/// every verdict to 0.
struct OutcomeVerdict {
  std::vector<int> raw;
  std::vector<int> oriented;
};

OutcomeVerdict compare_outcomes(const std::vector<double>& point_b,
                                const OutcomeEstimate& est_e,
                                const std::vector<char>& higher_is_better);

}  // namespace cpk
