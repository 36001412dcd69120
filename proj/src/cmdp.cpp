// cmdp.cpp — occupancy-measure LP assembly and branch-and-bound over
// deterministic action supports.
#include "cpk/cmdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace cpk {

namespace {

constexpr double kIntTol = 1e-6;    // action-share integrality tolerance
constexpr double kMassTol = 1e-9;   // below this a state counts as unvisited
constexpr double kSelfLoop = 1.0 - 1e-12;

// Column layout for the occupancy LP: one variable per usable transient
// (state, action) pair, in (state, action) order.
struct ColumnMap {
  std::vector<int> transient;                // transient state ids
  std::vector<std::vector<int>> col_of;      // [s][a] -> column or -1
  std::vector<std::pair<int, int>> sa_of;    // column -> (s, a)
};

ColumnMap build_columns(const CmdpInstance& inst, const std::vector<char>& banned_cols) {
  ColumnMap cm;
  cm.transient = inst.mdp.transient_states();
  cm.col_of.assign(std::size_t(inst.mdp.n_states),
                   std::vector<int>(std::size_t(inst.mdp.n_actions), -1));
  // banned_cols indexes the FULL column set (built with no bans), so the
  // layout must be computed identically in both passes.
  int full_idx = 0;
  for (int s : cm.transient) {
    for (int a = 0; a < inst.mdp.n_actions; ++a) {
      if (!inst.allowed[std::size_t(s)][std::size_t(a)]) continue;
      int this_full = full_idx++;
      if (!banned_cols.empty() && banned_cols[std::size_t(this_full)]) continue;
      cm.col_of[std::size_t(s)][std::size_t(a)] = int(cm.sa_of.size());
      cm.sa_of.emplace_back(s, a);
    }
  }
  return cm;
}

int count_full_columns(const CmdpInstance& inst) {
  int n = 0;
  for (int s : inst.mdp.transient_states())
    for (int a = 0; a < inst.mdp.n_actions; ++a)
      if (inst.allowed[std::size_t(s)][std::size_t(a)]) ++n;
  return n;
}

LpProblem build_lp(const CmdpInstance& inst, const ColumnMap& cm) {
  const TabularMdp& m = inst.mdp;
  int n = int(cm.sa_of.size());
  LpProblem lp;
  lp.maximize = true;
  lp.objective.assign(std::size_t(n), 0.0);
  for (int j = 0; j < n; ++j) {
    auto [s, a] = cm.sa_of[std::size_t(j)];
    lp.objective[std::size_t(j)] = m.reward_at(s, a);
  }

  // Flow conservation at each transient state, with starts scaled to inject
  // flow_scale * p0 units.
  for (int sp : cm.transient) {
    LpRow row;
    row.rel = LpRow::EQ;
    row.coeffs.assign(std::size_t(n), 0.0);
    for (int j = 0; j < n; ++j) {
      auto [s, a] = cm.sa_of[std::size_t(j)];
      double c = (s == sp ? 1.0 : 0.0) - m.transition[std::size_t(s)][std::size_t(a)][std::size_t(sp)];
      row.coeffs[std::size_t(j)] = c;
    }
    row.rhs = inst.flow_scale * m.initial_dist[std::size_t(sp)];
    lp.rows.push_back(std::move(row));
  }

  if (std::isfinite(inst.kappa)) {
    LpRow row;
    row.rel = LpRow::LE;
    row.coeffs.assign(std::size_t(n), 0.0);
    for (int j = 0; j < n; ++j) {
      auto [s, a] = cm.sa_of[std::size_t(j)];
      row.coeffs[std::size_t(j)] = inst.cost[std::size_t(s)][std::size_t(a)];
    }
    row.rhs = inst.kappa;
    lp.rows.push_back(std::move(row));
  }

  // Per-state visit cap (the MILP's x <= M delta collapsed onto the state).
  for (int s : cm.transient) {
    LpRow row;
    row.rel = LpRow::LE;
    row.coeffs.assign(std::size_t(n), 0.0);
    bool any = false;
    for (int a = 0; a < m.n_actions; ++a) {
      int j = cm.col_of[std::size_t(s)][std::size_t(a)];
      if (j < 0) continue;
      row.coeffs[std::size_t(j)] = 1.0;
      any = true;
    }
    if (!any) continue;
    row.rhs = inst.big_m;
    lp.rows.push_back(std::move(row));
  }
  return lp;
}

void check_instance(const CmdpInstance& inst) {
  inst.mdp.validate();
  inst.pi_b.validate();
  require(inst.pi_b.n_states() == inst.mdp.n_states &&
              inst.pi_b.n_actions() == inst.mdp.n_actions,
          ErrorCode::DimensionMismatch, "policy shape mismatch");
  require(inst.kappa >= 0.0, ErrorCode::InvalidConfig, "negative cost budget");
  require(inst.big_m > 0.0, ErrorCode::InvalidConfig, "visit cap must be positive");
  require(int(inst.cost.size()) == inst.mdp.n_states &&
              int(inst.allowed.size()) == inst.mdp.n_states,
          ErrorCode::DimensionMismatch, "cost/allowed shape mismatch");
  for (int s = 0; s < inst.mdp.n_states; ++s) {
    require(int(inst.cost[std::size_t(s)].size()) == inst.mdp.n_actions &&
                int(inst.allowed[std::size_t(s)].size()) == inst.mdp.n_actions,
            ErrorCode::DimensionMismatch, "cost/allowed shape mismatch");
    if (inst.mdp.is_absorbing(s))
      for (double c : inst.cost[std::size_t(s)])
        require(c == 0.0, ErrorCode::InvalidConfig, "absorbing states must cost zero");
  }
}

}  // namespace

// ============================================================================
// Instance assembly
// ============================================================================

std::vector<std::vector<double>> deviation_cost(const TabularMdp& mdp,
                                                const TabularPolicy& pi_b) {
  pi_b.validate();
  require(pi_b.n_states() == mdp.n_states && pi_b.n_actions() == mdp.n_actions,
          ErrorCode::DimensionMismatch, "policy shape mismatch");
  std::vector cost(std::size_t(mdp.n_states), std::vector<double>(std::size_t(mdp.n_actions), 0.0));
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.is_absorbing(s)) continue;
    int ab = pi_b.argmax_action(s);
    for (int a = 0; a < mdp.n_actions; ++a)
      cost[std::size_t(s)][std::size_t(a)] = a == ab ? 0.0 : 1.0;
  }
  return cost;
}

double compute_big_m(const TabularMdp& mdp, const std::vector<std::vector<char>>* allowed) {
  mdp.validate();
  CmdpInstance tmp;
  tmp.mdp = mdp;
  if (allowed) {
    tmp.allowed = *allowed;
  } else {
    tmp.allowed.assign(std::size_t(mdp.n_states),
                       std::vector<char>(std::size_t(mdp.n_actions), 1));
  }
  tmp.flow_scale = 1.0;  // normalized starts: the answer is expected visits
  tmp.kappa = std::numeric_limits<double>::infinity();
  ColumnMap cm = build_columns(tmp, {});
  require(!cm.sa_of.empty(), ErrorCode::InvalidConfig, "no usable state-action pairs");
  LpProblem lp;
  lp.maximize = true;
  lp.objective.assign(cm.sa_of.size(), 1.0);
  // Flow rows only — the visit cap is what we are computing.
  const TabularMdp& m = tmp.mdp;
  for (int sp : cm.transient) {
    LpRow row;
    row.rel = LpRow::EQ;
    row.coeffs.assign(cm.sa_of.size(), 0.0);
    for (std::size_t j = 0; j < cm.sa_of.size(); ++j) {
      auto [s, a] = cm.sa_of[j];
      row.coeffs[j] =
          (s == sp ? 1.0 : 0.0) - m.transition[std::size_t(s)][std::size_t(a)][std::size_t(sp)];
    }
    row.rhs = m.initial_dist[std::size_t(sp)];
    lp.rows.push_back(std::move(row));
  }
  LpSolution sol = solve_lp(lp);
  require(sol.status != LpStatus::Unbounded, ErrorCode::Unbounded,
          "visit cap is unbounded: some policy never terminates");
  require(sol.status == LpStatus::Optimal, ErrorCode::NumericalFailure,
          "visit-cap LP was infeasible");
  return sol.objective;
}

CmdpInstance make_cmdp(const TabularMdp& mdp, const TabularPolicy& pi_b, double kappa) {
  mdp.validate();
  require(kappa >= 0.0, ErrorCode::InvalidConfig, "negative cost budget");
  CmdpInstance inst;
  inst.mdp = mdp;
  inst.pi_b = pi_b;
  inst.cost = deviation_cost(mdp, pi_b);
  inst.kappa = kappa;

  // Pure self-loop actions can circulate mass forever without reaching an
  // absorbing state; excluding them keeps the flow polytope bounded. Any
  // proper policy avoids them on visited states anyway.
  inst.allowed.assign(std::size_t(mdp.n_states),
                      std::vector<char>(std::size_t(mdp.n_actions), 0));
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.is_absorbing(s)) continue;
    for (int a = 0; a < mdp.n_actions; ++a)
      inst.allowed[std::size_t(s)][std::size_t(a)] =
          mdp.transition[std::size_t(s)][std::size_t(a)][std::size_t(s)] < kSelfLoop ? 1 : 0;
  }

  double starts = 0.0;
  for (double p : mdp.initial_dist) starts += p > 0.0 ? 1.0 : 0.0;
  inst.flow_scale = starts;
  inst.big_m = compute_big_m(mdp, &inst.allowed) * starts;
  return inst;
}

// ============================================================================
// Branch and bound
// ============================================================================

namespace {

struct Node {
  double bound = 0.0;          // LP relaxation objective (aggregate units)
  long id = 0;                 // creation order, for deterministic tie-breaks
  std::vector<char> banned;    // full-column-index mask
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    // std::priority_queue surfaces the "largest"; we want highest bound,
    // then lowest id.
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.id > b.id;
  }
};

}  // namespace

OccupancySolution solve_cmdp_milp(const CmdpInstance& inst) {
  check_instance(inst);
  int n_full = count_full_columns(inst);
  require(n_full >= 1, ErrorCode::InvalidConfig, "no usable state-action pairs");

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;

  auto solve_node = [&](const std::vector<char>& banned)
      -> std::pair<LpSolution, ColumnMap> {
    ColumnMap cm = build_columns(inst, banned);
    if (cm.sa_of.empty()) return {{LpStatus::Infeasible, {}, 0.0}, cm};
    LpSolution sol = solve_lp(build_lp(inst, cm));
    require(sol.status != LpStatus::Unbounded, ErrorCode::Unbounded,
            "occupancy LP unbounded: improper dynamics despite masking");
    return {sol, cm};
  };

  auto [root_sol, root_cm] = solve_node(std::vector<char>(std::size_t(n_full), 0));
  bool have_incumbent = false;
  double best_obj = -std::numeric_limits<double>::infinity();
  std::vector<double> best_x_flat;
  ColumnMap best_cm;

  if (root_sol.status == LpStatus::Optimal)
    open.push({root_sol.objective, next_id++, std::vector<char>(std::size_t(n_full), 0)});

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (have_incumbent && node.bound <= best_obj + 1e-9) continue;
    auto [sol, cm] = solve_node(node.banned);
    if (sol.status != LpStatus::Optimal) continue;
    if (have_incumbent && sol.objective <= best_obj + 1e-9) continue;

    // Find the least-integral state: conditional top-action share nearest 1/2.
    int branch_s = -1, branch_a = -1;
    double worst_gap = -1.0;
    for (int s : cm.transient) {
      double mass = 0.0, top = -1.0;
      int top_a = -1;
      for (int a = 0; a < inst.mdp.n_actions; ++a) {
        int j = cm.col_of[std::size_t(s)][std::size_t(a)];
        if (j < 0) continue;
        double v = sol.x[std::size_t(j)];
        mass += v;
        if (v > top) {
          top = v;
          top_a = a;
        }
      }
      if (mass <= kMassTol) continue;
      double share = top / mass;
      if (share >= 1.0 - kIntTol) continue;
      double gap = std::min(share, 1.0 - share);  // distance from integrality
      if (gap > worst_gap) {
        worst_gap = gap;
        branch_s = s;
        branch_a = top_a;
      }
    }

    if (branch_s < 0) {
      // Integral: new incumbent (strict improvement; ties keep the earlier).
      have_incumbent = true;
      best_obj = sol.objective;
      best_x_flat = sol.x;
      best_cm = cm;
      continue;
    }

    // Children: forbid the leading action, or commit to it exclusively.
    std::vector<char> off = node.banned;
    std::vector<char> on = node.banned;
    {
      // Rebuild the full-index layout to translate (s,a) -> full column.
      int full_idx = 0;
      for (int s : inst.mdp.transient_states()) {
        for (int a = 0; a < inst.mdp.n_actions; ++a) {
          if (!inst.allowed[std::size_t(s)][std::size_t(a)]) continue;
          if (s == branch_s && a == branch_a) off[std::size_t(full_idx)] = 1;
          if (s == branch_s && a != branch_a) on[std::size_t(full_idx)] = 1;
          ++full_idx;
        }
      }
    }
    for (auto& child : {off, on}) {
      auto [csol, ccm] = solve_node(child);
      (void)ccm;
      if (csol.status != LpStatus::Optimal) continue;
      if (have_incumbent && csol.objective <= best_obj + 1e-9) continue;
      open.push({csol.objective, next_id++, child});
    }
  }

  OccupancySolution out;
  if (!have_incumbent) {
    out.status = LpStatus::Infeasible;
    return out;
  }
  out.status = LpStatus::Optimal;
  out.x.assign(std::size_t(inst.mdp.n_states),
               std::vector<double>(std::size_t(inst.mdp.n_actions), 0.0));
  for (std::size_t j = 0; j < best_cm.sa_of.size(); ++j) {
    auto [s, a] = best_cm.sa_of[j];
    out.x[std::size_t(s)][std::size_t(a)] = best_x_flat[j];
  }
  out.delta.assign(std::size_t(inst.mdp.n_states),
                   std::vector<int>(std::size_t(inst.mdp.n_actions), 0));
  out.objective_mass = best_obj;
  out.objective = best_obj / inst.flow_scale;
  for (int s = 0; s < inst.mdp.n_states; ++s) {
    if (inst.mdp.is_absorbing(s)) continue;
    double mass = 0.0;
    int top_a = -1;
    double top = -1.0;
    for (int a = 0; a < inst.mdp.n_actions; ++a) {
      double v = out.x[std::size_t(s)][std::size_t(a)];
      mass += v;
      out.expected_cost += v * inst.cost[std::size_t(s)][std::size_t(a)];
      if (v > top) {
        top = v;
        top_a = a;
      }
    }
    if (mass <= kMassTol) continue;
    require(top / mass >= 1.0 - kIntTol, ErrorCode::NumericalFailure,
            "incumbent lost single-action support");
    out.delta[std::size_t(s)][std::size_t(top_a)] = 1;
    if (top_a != inst.pi_b.argmax_action(s)) ++out.aggregate_changes;
  }
  require(!std::isfinite(inst.kappa) || out.expected_cost <= inst.kappa + 1e-6,
          ErrorCode::NumericalFailure, "budget violated in returned solution");
  // Flow-conservation audit in aggregate units.
  for (int sp : inst.mdp.transient_states()) {
    double lhs = 0.0;
    for (int a = 0; a < inst.mdp.n_actions; ++a) lhs += out.x[std::size_t(sp)][std::size_t(a)];
    for (int s : inst.mdp.transient_states())
      for (int a = 0; a < inst.mdp.n_actions; ++a)
        lhs -= out.x[std::size_t(s)][std::size_t(a)] *
               inst.mdp.transition[std::size_t(s)][std::size_t(a)][std::size_t(sp)];
    require(std::abs(lhs - inst.flow_scale * inst.mdp.initial_dist[std::size_t(sp)]) < 1e-6,
            ErrorCode::NumericalFailure, "flow conservation violated");
  }
  return out;
}

TabularPolicy extract_policy(const OccupancySolution& solution, const CmdpInstance& inst) {
  require(solution.status == LpStatus::Optimal, ErrorCode::NotOptimal,
          "cannot extract a policy from a non-optimal solution");
  std::vector<int> actions(std::size_t(inst.mdp.n_states), 0);
  for (int s = 0; s < inst.mdp.n_states; ++s) {
    actions[std::size_t(s)] = inst.pi_b.argmax_action(s);
    if (inst.mdp.is_absorbing(s)) continue;
    double mass = 0.0;
    int top_a = -1;
    double top = -1.0;
    for (int a = 0; a < inst.mdp.n_actions; ++a) {
      double v = solution.x[std::size_t(s)][std::size_t(a)];
      mass += v;
      if (v > top) {
        top = v;
        top_a = a;
      }
    }
    if (mass > kMassTol) actions[std::size_t(s)] = top_a;
  }
  return TabularPolicy::deterministic(inst.mdp.n_states, inst.mdp.n_actions, actions);
}

// ============================================================================
// Budget sweeps
// ============================================================================

std::vector<FrontierRow> sweep_kappa(const TabularMdp& mdp, const TabularPolicy& pi_b,
                                     const std::vector<double>& kappas) {
  require(std::is_sorted(kappas.begin(), kappas.end()), ErrorCode::InvalidConfig,
          "budgets must be sorted ascending");
  std::vector<FrontierRow> rows;
  for (double k : kappas) {
    CmdpInstance inst = make_cmdp(mdp, pi_b, k);
    OccupancySolution sol = solve_cmdp_milp(inst);
    require(sol.status == LpStatus::Optimal, ErrorCode::Infeasible,
            "budget sweep hit an infeasible instance");
    FrontierRow row;
    row.kappa = k;
    row.expected_cost = sol.expected_cost;
    row.aggregate_changes = sol.aggregate_changes;
    row.expected_return = sol.objective;
    row.policy = extract_policy(sol, inst);
    rows.push_back(std::move(row));
  }
  for (std::size_t i = 1; i < rows.size(); ++i)
    require(rows[i].expected_return >= rows[i - 1].expected_return - 1e-6,
            ErrorCode::NumericalFailure, "frontier lost monotonicity");
  return rows;
}

std::string frontier_csv(const std::vector<FrontierRow>& frontier) {
  std::string out = "kappa,expected_cost,aggregate_changes,expected_return\n";
  for (const auto& r : frontier)
    out += fmt_short(r.kappa) + "," + fmt_g17(r.expected_cost) + "," +
           std::to_string(r.aggregate_changes) + "," + fmt_g17(r.expected_return) + "\n";
  return out;
}

}  // namespace cpk
