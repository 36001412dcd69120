// region_bridge.cpp — disagreement-region discovery, tabular model estimation
// over regions, and lifting back to piecewise-rule navigation policies.

#include "cpk/region_bridge.hpp"

#include <algorithm>
#include <map>

#include "cpk/explainer.hpp"

namespace cpk {

// ============================================================================
// Region geometry
// ============================================================================

std::string desc_from_box(double x_lo, double x_hi, double y_lo, double y_hi) {
  return fmt_short(x_lo) + "≤x<" + fmt_short(x_hi) + ", " + fmt_short(y_lo) + "≤y<" +
         fmt_short(y_hi);
}

Json Region::to_json() const {
  return {{"label", label},
          {"desc", desc},
          {"x_lo", x_lo},
          {"x_hi", x_hi},
          {"y_lo", y_lo},
          {"y_hi", y_hi},
          {"representative", {{"x", representative.x}, {"y", representative.y}}},
          {"action_b", nav_action_name(action_b)},
          {"action_e", nav_action_name(action_e)}};
}

int RegionSet::region_of(const Vec2& p) const {
  for (std::size_t k = 0; k < regions.size(); ++k)
    if (regions[k].contains(p)) return int(k);
  return -1;
}

Json RegionSet::to_json() const {
  Json jr = Json::array();
  for (const auto& r : regions) jr.push_back(r.to_json());
  return {{"regions", jr}, {"goal_x", goal_x}};
}

// ============================================================================
// Collection
// ============================================================================

namespace {

/// Box under construction: geometry plus the collected disagreement states it
/// covers (collection order), used for representatives and de-overlap.
struct RawBox {
  double x_lo, x_hi, y_lo, y_hi;
  int action_b, action_e;
  std::vector<Vec2> members;

  bool contains(const Vec2& p) const {
    return p.x >= x_lo && p.x < x_hi && p.y >= y_lo && p.y < y_hi;
  }
  double area() const { return (x_hi - x_lo) * (y_hi - y_lo); }
  bool same_bounds(const RawBox& o) const {
    return x_lo == o.x_lo && x_hi == o.x_hi && y_lo == o.y_lo && y_hi == o.y_hi;
  }
  bool overlaps(const RawBox& o) const {
    return x_lo < o.x_hi && o.x_lo < x_hi && y_lo < o.y_hi && o.y_lo < y_hi;
  }
};

/// Interval bounds of one feature inside a clause: predicate thresholds
/// intersected with the grid-snapped support box (mirrors describe_clause).
void clause_interval(const Clause& clause, const FeatureSpace& space, int f, double& lo,
                     double& hi) {
  const auto& feat = space.features[std::size_t(f)];
  lo = feat.range_lo;
  hi = feat.range_hi;
  for (const auto& p : clause.preds) {
    if (p.feature != f) continue;
    if (p.cmp == Predicate::GE)
      lo = std::max(lo, p.threshold);
    else
      hi = std::min(hi, p.threshold);
  }
  if (clause.has_support) {
    lo = std::max(lo, clause.sup_lo[std::size_t(f)]);
    hi = std::min(hi, clause.sup_hi[std::size_t(f)]);
  }
}

/// Subtracts `cut` from `box`, appending the surviving rectangles (left/right
/// slabs at full height, then middle top/bottom slabs) to `out`.
void subtract_box(const RawBox& box, const RawBox& cut, std::vector<RawBox>& out) {
  if (!box.overlaps(cut)) {
    out.push_back(box);
    return;
  }
  auto piece = [&](double xl, double xh, double yl, double yh) {
    if (xl >= xh || yl >= yh) return;
    RawBox p = box;
    p.x_lo = xl;
    p.x_hi = xh;
    p.y_lo = yl;
    p.y_hi = yh;
    p.members.clear();
    for (const auto& m : box.members)
      if (p.contains(m)) p.members.push_back(m);
    out.push_back(std::move(p));
  };
  piece(box.x_lo, std::max(box.x_lo, cut.x_lo), box.y_lo, box.y_hi);
  piece(std::min(box.x_hi, cut.x_hi), box.x_hi, box.y_lo, box.y_hi);
  double mid_lo = std::max(box.x_lo, cut.x_lo);
  double mid_hi = std::min(box.x_hi, cut.x_hi);
  piece(mid_lo, mid_hi, box.y_lo, std::max(box.y_lo, cut.y_lo));
  piece(mid_lo, mid_hi, std::min(box.y_hi, cut.y_hi), box.y_hi);
}

}  // namespace

RegionSet collect_regions(const RulePolicy& pi_b, const std::vector<RulePolicy>& candidates,
                          const BoxNavMdp& mdp, const RegionCollectConfig& cfg,
                          std::uint64_t seed) {
  require(!candidates.empty(), ErrorCode::InvalidConfig, "collect_regions: no candidates");
  require(cfg.n_start_draws >= 0, ErrorCode::InvalidConfig,
          "collect_regions: negative start draws");

  std::vector<Vec2> starts{cfg.canonical_start};
  Rng rng(derive_seed(seed, 1));
  for (int i = 0; i < cfg.n_start_draws; ++i) starts.push_back(mdp.sample_start(rng));

  FeatureSpace space = FeatureSpace::nav_grid(cfg.grid);
  std::function<FeatureVec(const Vec2&)> features = nav_features;

  std::vector<RawBox> accepted;
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    std::vector<LabeledStateSet<Vec2>> parts;
    for (std::size_t si = 0; si < starts.size(); ++si)
      parts.push_back(collect_diverging_states(
          pi_b, candidates[ci], mdp, starts[si], cfg.divergence,
          derive_seed(derive_seed(seed, 2 + ci), si)));
    LabeledStateSet<Vec2> merged = merge_labeled_sets(parts);
    if (merged.n_diverging() == 0) continue;

    DivergenceModel model = train_divergence_model<Vec2>(merged, features, space, cfg.budget);
    std::vector<Vec2> diverging;
    for (const auto& e : merged.entries)
      if (e.label != 0) diverging.push_back(e.state);

    for (const auto& rs : model.classifier.ordered_rules) {
      auto pair_it = model.label_actions.find(rs.predicted_label);
      require(pair_it != model.label_actions.end(), ErrorCode::InvalidState,
              "collect_regions: class without an action pair");
      for (const auto& clause : rs.clauses) {
        RawBox box;
        clause_interval(clause, space, 0, box.x_lo, box.x_hi);
        clause_interval(clause, space, 1, box.y_lo, box.y_hi);
        box.action_b = pair_it->second.first;
        box.action_e = pair_it->second.second;
        if (box.area() <= 0.0) continue;
        for (const auto& s : diverging)
          if (box.contains(s)) box.members.push_back(s);
        if (box.members.empty()) continue;

        // Exact duplicates collapse; partial overlaps keep the earlier box
        // intact and add only the remainder of the new one.
        bool dup = false;
        for (const auto& a : accepted) dup = dup || a.same_bounds(box);
        if (dup) continue;
        std::vector<RawBox> pieces{box};
        for (const auto& a : accepted) {
          std::vector<RawBox> next;
          for (const auto& p : pieces) subtract_box(p, a, next);
          pieces = std::move(next);
        }
        for (auto& p : pieces)
          if (p.area() > 0.0 && !p.members.empty()) accepted.push_back(std::move(p));
      }
    }
  }

  std::sort(accepted.begin(), accepted.end(), [](const RawBox& a, const RawBox& b) {
    return a.x_lo < b.x_lo || (a.x_lo == b.x_lo && a.y_lo < b.y_lo);
  });
  RegionSet out;
  out.goal_x = mdp.goal_x;
  for (std::size_t k = 0; k < accepted.size(); ++k) {
    Region r;
    r.label = int(k);
    r.x_lo = accepted[k].x_lo;
    r.x_hi = accepted[k].x_hi;
    r.y_lo = accepted[k].y_lo;
    r.y_hi = accepted[k].y_hi;
    r.desc = desc_from_box(r.x_lo, r.x_hi, r.y_lo, r.y_hi);
    r.representative = accepted[k].members.front();
    r.action_b = accepted[k].action_b;
    r.action_e = accepted[k].action_e;
    out.regions.push_back(std::move(r));
  }
  return out;
}

// ============================================================================
// Trajectory harness and tabular construction
// ============================================================================

RegionTrajectories build_region_trajectories(const BoxNavMdp& mdp, const RulePolicy& pi_b,
                                             const std::vector<RulePolicy>& candidates,
                                             const RegionSet& rs,
                                             const RegionCollectConfig& cfg) {
  RegionTrajectories out;
  out.main.push_back(rollout(mdp, pi_b, cfg.canonical_start, mdp.max_steps_cap, 0));
  for (const auto& cand : candidates)
    out.main.push_back(rollout(mdp, cand, cfg.canonical_start, mdp.max_steps_cap, 0));

  std::vector<int> base_actions;
  for (const auto& r : rs.regions) base_actions.push_back(pi_b.act(r.representative));
  for (int k = 0; k < rs.size(); ++k) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      std::vector<int> assign = base_actions;
      assign[std::size_t(k)] = a;
      RulePolicy probe = lift_policy(assign, pi_b, rs);
      out.probes.push_back(rollout(mdp, probe, rs.regions[std::size_t(k)].representative,
                                   mdp.max_steps_cap, 0));
    }
  }
  return out;
}

RegionMdp build_region_mdp(const RegionTrajectories& trajs, const RegionSet& rs) {
  const int K = rs.size();
  require(K > 0, ErrorCode::NoCoverage, "build_region_mdp: empty region set");
  const int n = K + 1;
  const int n_actions = 3;

  std::vector trans_count(std::size_t(K), std::vector(std::size_t(n_actions),
                                                      std::vector<long>(std::size_t(n), 0)));
  std::vector reward_sum(std::size_t(K), std::vector<double>(std::size_t(n_actions), 0.0));
  std::vector total(std::size_t(K), std::vector<long>(std::size_t(n_actions), 0));

  auto scan = [&](const Trajectory<Vec2>& tr) {
    int open = -1, open_action = -1;
    double acc = 0.0;
    for (std::size_t t = 0; t < tr.n_steps(); ++t) {
      int r = rs.region_of(tr.states[t]);
      bool entry = r >= 0 && (t == 0 || rs.region_of(tr.states[t - 1]) != r);
      if (entry) {
        if (open >= 0) {
          ++trans_count[std::size_t(open)][std::size_t(open_action)][std::size_t(r)];
          reward_sum[std::size_t(open)][std::size_t(open_action)] += acc;
          ++total[std::size_t(open)][std::size_t(open_action)];
        }
        open = r;
        open_action = tr.actions[t];
        acc = 0.0;
      }
      acc += tr.rewards[t];
    }
    // A finished episode closes the open segment into the absorbing state; a
    // truncated one contributes nothing for it.
    if (open >= 0 && tr.terminated) {
      ++trans_count[std::size_t(open)][std::size_t(open_action)][std::size_t(K)];
      reward_sum[std::size_t(open)][std::size_t(open_action)] += acc;
      ++total[std::size_t(open)][std::size_t(open_action)];
    }
  };
  for (const auto& tr : trajs.main) scan(tr);
  for (const auto& tr : trajs.probes) scan(tr);

  RegionMdp out;
  out.regions = rs;
  out.mdp.n_states = n;
  out.mdp.n_actions = n_actions;
  out.mdp.transition.assign(std::size_t(n), std::vector(std::size_t(n_actions),
                                                        std::vector<double>(std::size_t(n), 0.0)));
  out.mdp.reward.assign(std::size_t(n), std::vector<double>(std::size_t(n_actions), 0.0));
  out.mdp.initial_dist.assign(std::size_t(n), 0.0);
  out.mdp.absorbing.assign(std::size_t(n), false);
  out.mdp.absorbing[std::size_t(K)] = true;
  out.mdp.max_steps = 200;
  out.samples.assign(std::size_t(K), std::vector<long>(std::size_t(n_actions), 0));
  out.covered.assign(std::size_t(K), std::vector<char>(std::size_t(n_actions), 0));

  for (int k = 0; k < K; ++k) {
    bool any = false;
    for (int a = 0; a < n_actions; ++a) {
      long tot = total[std::size_t(k)][std::size_t(a)];
      out.samples[std::size_t(k)][std::size_t(a)] = tot;
      if (tot == 0) {
        out.mdp.transition[std::size_t(k)][std::size_t(a)][std::size_t(k)] = 1.0;
        continue;
      }
      any = true;
      out.covered[std::size_t(k)][std::size_t(a)] = 1;
      for (int j = 0; j < n; ++j)
        out.mdp.transition[std::size_t(k)][std::size_t(a)][std::size_t(j)] =
            double(trans_count[std::size_t(k)][std::size_t(a)][std::size_t(j)]) / double(tot);
      out.mdp.reward[std::size_t(k)][std::size_t(a)] =
          reward_sum[std::size_t(k)][std::size_t(a)] / double(tot);
    }
    require(any, ErrorCode::NoCoverage,
            "build_region_mdp: no sampled action for region " + std::to_string(k));
    out.action_b.push_back(rs.regions[std::size_t(k)].action_b);
  }
  for (int a = 0; a < n_actions; ++a)
    out.mdp.transition[std::size_t(K)][std::size_t(a)][std::size_t(K)] = 1.0;

  long n_starts = 0;
  for (const auto& tr : trajs.main) {
    for (const auto& s : tr.states) {
      int r = rs.region_of(s);
      if (r >= 0) {
        out.mdp.initial_dist[std::size_t(r)] += 1.0;
        ++n_starts;
        break;
      }
    }
  }
  require(n_starts > 0, ErrorCode::NoCoverage,
          "build_region_mdp: no main rollout enters any region");
  for (double& p : out.mdp.initial_dist) p /= double(n_starts);

  out.mdp.validate();
  return out;
}

// ============================================================================
// Lifting
// ============================================================================

RulePolicy lift_policy(const std::vector<int>& region_actions, const RulePolicy& pi_b,
                       const RegionSet& rs) {
  require(int(region_actions.size()) == rs.size(), ErrorCode::DimensionMismatch,
          "lift_policy: one action per region required");
  RulePolicy out;
  for (int k = 0; k < rs.size(); ++k) {
    const Region& r = rs.regions[std::size_t(k)];
    PolicyRule rule;
    rule.conds = {cond_range(0, r.x_lo, r.x_hi), cond_range(1, r.y_lo, r.y_hi)};
    rule.action = region_actions[std::size_t(k)];
    out.rules.push_back(std::move(rule));
  }
  out.rules.insert(out.rules.end(), pi_b.rules.begin(), pi_b.rules.end());
  out.default_action = pi_b.default_action;
  return out;
}

RulePolicy lift_policy(const TabularPolicy& region_policy, const RulePolicy& pi_b,
                       const RegionSet& rs) {
  require(region_policy.n_states() >= rs.size(), ErrorCode::DimensionMismatch,
          "lift_policy: tabular policy smaller than region set");
  std::vector<int> actions;
  for (int k = 0; k < rs.size(); ++k) actions.push_back(region_policy.argmax_action(k));
  return lift_policy(actions, pi_b, rs);
}

}  // namespace cpk
