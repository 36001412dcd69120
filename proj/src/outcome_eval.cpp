// outcome_eval.cpp — empirical dynamics fitting, model-based bootstrap, and
// interval-vs-point outcome verdicts.
#include "cpk/outcome_eval.hpp"

#include <algorithm>
#include <cmath>

namespace cpk {

// ============================================================================
// fit_dynamics
// ============================================================================

DynamicsEstimate fit_dynamics(const std::vector<Trajectory<int>>& batch, int n_states,
                              int n_actions) {
  require(!batch.empty(), ErrorCode::EmptyBatch, "fit_dynamics: empty batch");

  int max_s = -1, max_a = -1;
  for (const auto& tr : batch) {
    for (int s : tr.states) max_s = std::max(max_s, s);
    for (int a : tr.actions) max_a = std::max(max_a, a);
  }
  if (n_states < 0) n_states = max_s + 1;
  if (n_actions < 0) n_actions = max_a + 1;
  require(max_s < n_states && max_a < n_actions, ErrorCode::InvalidState,
          "fit_dynamics: batch indices exceed declared dimensions");
  require(n_states >= 1 && n_actions >= 1, ErrorCode::InvalidConfig,
          "fit_dynamics: empty state or action space");

  auto z = std::size_t(n_states);
  auto za = std::size_t(n_actions);
  std::vector counts(z, std::vector(za, std::vector<double>(z, 0.0)));
  std::vector reward_sum(z, std::vector<double>(za, 0.0));
  std::vector<std::vector<char>> observed(z, std::vector<char>(za, 0));
  std::vector<char> terminal_seen(z, 0), has_outgoing(z, 0);
  std::vector<double> start_counts(z, 0.0);

  for (const auto& tr : batch) {
    require(tr.states.size() == tr.actions.size() + 1 &&
                tr.actions.size() == tr.rewards.size(),
            ErrorCode::InvalidConfig, "fit_dynamics: malformed trajectory");
    start_counts[std::size_t(tr.states.front())] += 1.0;
    for (std::size_t t = 0; t < tr.actions.size(); ++t) {
      int s = tr.states[t], a = tr.actions[t], sp = tr.states[t + 1];
      counts[std::size_t(s)][std::size_t(a)][std::size_t(sp)] += 1.0;
      reward_sum[std::size_t(s)][std::size_t(a)] += tr.rewards[t];
      observed[std::size_t(s)][std::size_t(a)] = 1;
      has_outgoing[std::size_t(s)] = 1;
    }
    if (tr.terminated) terminal_seen[std::size_t(tr.states.back())] = 1;
  }

  DynamicsEstimate est;
  est.observed = observed;
  TabularMdp& m = est.mdp;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.transition.assign(z, std::vector(za, std::vector<double>(z, 0.0)));
  m.reward.assign(z, std::vector<double>(za, 0.0));
  m.absorbing.assign(z, false);
  for (int s = 0; s < n_states; ++s)
    m.absorbing[std::size_t(s)] = terminal_seen[std::size_t(s)] && !has_outgoing[std::size_t(s)];

  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      if (m.absorbing[std::size_t(s)]) {
        m.transition[std::size_t(s)][std::size_t(a)][std::size_t(s)] = 1.0;
        continue;
      }
      double total = 0.0;
      for (int sp = 0; sp < n_states; ++sp)
        total += counts[std::size_t(s)][std::size_t(a)][std::size_t(sp)];
      if (total <= 0.0) {
        // Never observed: zero-reward self-loop, flagged via observed[][]=0.
        m.transition[std::size_t(s)][std::size_t(a)][std::size_t(s)] = 1.0;
        continue;
      }
      for (int sp = 0; sp < n_states; ++sp)
        m.transition[std::size_t(s)][std::size_t(a)][std::size_t(sp)] =
            counts[std::size_t(s)][std::size_t(a)][std::size_t(sp)] / total;
      m.reward[std::size_t(s)][std::size_t(a)] = reward_sum[std::size_t(s)][std::size_t(a)] / total;
    }
  }

  double start_total = 0.0;
  for (double c : start_counts) start_total += c;
  m.initial_dist.assign(z, 0.0);
  for (int s = 0; s < n_states; ++s)
    m.initial_dist[std::size_t(s)] = start_counts[std::size_t(s)] / start_total;
  m.validate();
  return est;
}

// ============================================================================
// bootstrap_outcome_ci
// ============================================================================

namespace {

struct ReplicateResult {
  std::vector<double> means;
  bool unreliable = false;
};

// One rollout under the fitted model, tracking whether any unobserved pair
// was traversed. Truncation at the horizon is tolerated (totals are partial,
// the replicate is marked unreliable) rather than raised.
void rollout_fitted(const DynamicsEstimate& est, const TabularPolicy& pol, int s0,
                    const OutcomeSet<int>& outcomes, std::uint64_t seed,
                    std::vector<double>& totals_out, bool& unreliable) {
  Rng rng(seed);
  Trajectory<int> traj;
  int s = s0;
  traj.states.push_back(s);
  const TabularMdp& m = est.mdp;
  for (int t = 0; t < m.max_steps && !m.is_absorbing(s); ++t) {
    int a = pol.sample_action(s, rng);
    if (!est.observed[std::size_t(s)][std::size_t(a)]) unreliable = true;
    int sp = m.sample_next(s, a, rng);
    traj.actions.push_back(a);
    traj.rewards.push_back(m.reward_at(s, a));
    traj.states.push_back(sp);
    s = sp;
  }
  traj.terminated = m.is_absorbing(s);
  if (!traj.terminated) unreliable = true;
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    totals_out[i] += outcome_total(outcomes[i], traj);
}

double percentile(std::vector<double> sorted, double q) {
  // Linear interpolation between order statistics (the common "type 7" rule).
  double pos = q * double(sorted.size() - 1);
  std::size_t i = std::size_t(pos);
  if (i + 1 >= sorted.size()) return sorted.back();
  double frac = pos - double(i);
  return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

}  // namespace

OutcomeEstimate bootstrap_outcome_ci(const std::vector<Trajectory<int>>& batch,
                                     const TabularPolicy& policy_e, int s0,
                                     const OutcomeSet<int>& outcomes, int B, int n_rollouts,
                                     double ci_level, std::uint64_t seed) {
  require(!batch.empty(), ErrorCode::EmptyBatch, "bootstrap: empty batch");
  require(B >= 2, ErrorCode::InvalidConfig, "bootstrap: need B >= 2");
  require(n_rollouts >= 1, ErrorCode::InvalidConfig, "bootstrap: need n_rollouts >= 1");
  require(ci_level > 0.0 && ci_level < 1.0, ErrorCode::InvalidConfig,
          "bootstrap: ci_level must lie in (0,1)");
  require(!outcomes.empty(), ErrorCode::InvalidConfig, "bootstrap: no outcomes given");

  auto replicates = parallel_map<ReplicateResult>(std::size_t(B), [&](std::size_t b) {
    std::uint64_t base = derive_seed(seed, std::uint64_t(b));
    Rng resample_rng(derive_seed(base, 0));
    std::vector<Trajectory<int>> resampled;
    resampled.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
      resampled.push_back(batch[resample_rng.uniform_int(batch.size())]);

    ReplicateResult rr;
    rr.means.assign(outcomes.size(), 0.0);
    DynamicsEstimate est = fit_dynamics(resampled, policy_e.n_states(), policy_e.n_actions());
    for (int r = 0; r < n_rollouts; ++r)
      rollout_fitted(est, policy_e, s0, outcomes, derive_seed(base, 1 + std::uint64_t(r)),
                     rr.means, rr.unreliable);
    for (auto& v : rr.means) v /= double(n_rollouts);
    return rr;
  });

  OutcomeEstimate out;
  out.n_bootstrap = B;
  out.ci_level = ci_level;
  out.point.assign(outcomes.size(), 0.0);
  out.lower.assign(outcomes.size(), 0.0);
  out.upper.assign(outcomes.size(), 0.0);
  for (const auto& rr : replicates) out.unreliable = out.unreliable || rr.unreliable;

  for (std::size_t m = 0; m < outcomes.size(); ++m) {
    std::vector<double> vals;
    vals.reserve(replicates.size());
    for (const auto& rr : replicates) vals.push_back(rr.means[m]);
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= double(vals.size());
    std::sort(vals.begin(), vals.end());
    double lo = percentile(vals, (1.0 - ci_level) / 2.0);
    double hi = percentile(vals, (1.0 + ci_level) / 2.0);
    out.point[m] = mean;
    out.lower[m] = std::min(lo, mean);
    out.upper[m] = std::max(hi, mean);
  }
  return out;
}

// ============================================================================
// compare_outcomes
// ============================================================================

OutcomeVerdict compare_outcomes(const std::vector<double>& point_b,
                                const OutcomeEstimate& est_e,
                                const std::vector<char>& higher_is_better) {
  require(point_b.size() == est_e.point.size() && point_b.size() == higher_is_better.size(),
          ErrorCode::DimensionMismatch, "compare_outcomes: dimension mismatch");
  OutcomeVerdict v;
  v.raw.assign(point_b.size(), 0);
  v.oriented.assign(point_b.size(), 0);
  for (std::size_t m = 0; m < point_b.size(); ++m) {
    int raw = 0;
    if (point_b[m] < est_e.lower[m])
      raw = 1;
    else if (point_b[m] > est_e.upper[m])
      raw = -1;
    if (est_e.unreliable) raw = 0;
    v.raw[m] = raw;
    v.oriented[m] = higher_is_better[m] ? raw : -raw;
  }
  return v;
}

// ============================================================================
// Serialization
// ============================================================================

Json OutcomeEstimate::to_json() const {
  return {{"point", point},         {"lower", lower},
          {"upper", upper},         {"ci_level", ci_level},
          {"B", n_bootstrap},       {"unreliable", unreliable}};
}

OutcomeEstimate OutcomeEstimate::from_json(const Json& j) {
  try {
    OutcomeEstimate e;
    e.point = j.at("point").get<std::vector<double>>();
    e.lower = j.at("lower").get<std::vector<double>>();
    e.upper = j.at("upper").get<std::vector<double>>();
    e.ci_level = j.at("ci_level").get<double>();
    e.n_bootstrap = j.at("B").get<int>();
    e.unreliable = j.value("unreliable", false);
    return e;
  } catch (const Json::exception& ex) {
    fail(ErrorCode::InvalidConfig, std::string("bad outcome estimate JSON: ") + ex.what());
  }
}

}  // namespace cpk
