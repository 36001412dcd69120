// cli.cpp — subcommand orchestration: wires the domains, divergence
// collection, outcome estimation, explanation assembly, and the budgeted
// policy-improvement solver into file-based runs.
//
// Determinism contract: every output byte is a function of the parsed
// configuration and --seed. No wall-clock, locale, or path-order input.

#include "cpk/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cpk/cmdp.hpp"
#include "cpk/domains.hpp"
#include "cpk/explainer.hpp"
#include "cpk/region_bridge.hpp"

namespace cpk {
namespace {

namespace fs = std::filesystem;

// ============================================================================
// Run configuration and file plumbing
// ============================================================================

struct CliConfig {
  std::string domain;    // "toy" | "nav2d"; empty when --mdp is used
  std::string mdp_path;  // custom tabular MDP JSON
  std::string pi_b_path;
  std::string pi_e_path;
  std::vector<std::string> candidate_paths;
  std::vector<std::string> kappa_args;
  double kappa_pi = 0.1;
  double kappa_t = 0.1;
  int d_max = 3;
  int bootstrap_b = 200;
  double ci_level = 0.95;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

Json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::InvalidConfig, "cannot open file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::InvalidConfig, "invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  fs::path p = fs::path(dir) / name;
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::InvalidConfig, "cannot write file: " + p.string());
  out << content;
  require(out.good(), ErrorCode::InvalidConfig, "write failed: " + p.string());
}

void write_json_file(const std::string& dir, const std::string& name, const Json& j) {
  write_file(dir, name, j.dump(2) + "\n");
}

double parse_kappa(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "INF")
    return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    require(used == s.size() && v >= 0.0, ErrorCode::InvalidConfig, "bad kappa: " + s);
    return v;
  } catch (const CpkError&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidConfig, "bad kappa: " + s);
  }
}

/// Parsed, ascending, de-duplicated budget list.
std::vector<double> parse_kappas(const std::vector<std::string>& args) {
  require(!args.empty(), ErrorCode::InvalidConfig, "at least one --kappa is required");
  std::vector<double> out;
  for (const auto& s : args) out.push_back(parse_kappa(s));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DivergenceConfig divergence_config(const CliConfig& cfg) {
  DivergenceConfig dcfg;
  dcfg.kappa_pi = cfg.kappa_pi;
  dcfg.kappa_T = cfg.kappa_t;
  dcfg.d_max = cfg.d_max;
  return dcfg;
}

// ============================================================================
// Tabular-domain resolution
// ============================================================================

struct TabularBundle {
  TabularMdp mdp;
  TabularPolicy pi_b;
  TabularPolicy pi_e;  // meaningful only when has_pi_e
  bool has_pi_e = false;
  OutcomeSet<int> outcomes;
};

/// Fallback outcome for user-supplied MDPs without domain outcome knowledge.
OutcomeSet<int> default_tabular_outcomes() {
  OutcomeFn<int> length;
  length.name = "trajectory length";
  length.higher_is_better = false;
  length.g = [](int, int) { return 1.0; };
  length.terminal_bonus = 1.0;
  length.phrases = {"longer trajectory", "shorter trajectory",
                    "unknown change in trajectory length"};
  return {length};
}

TabularBundle resolve_tabular(const CliConfig& cfg) {
  TabularBundle out;
  if (cfg.domain == "toy") {
    ToyDomain dom = make_toy_mdp();
    out.mdp = std::move(dom.mdp);
    out.pi_b = std::move(dom.pi_b);
    out.pi_e = std::move(dom.pi_e);
    out.has_pi_e = true;
    out.outcomes = std::move(dom.outcomes);
  } else {
    out.mdp = TabularMdp::from_json(load_json(cfg.mdp_path));
    require(!cfg.pi_b_path.empty(), ErrorCode::InvalidConfig,
            "--pi-b is required with a custom --mdp");
    out.outcomes = default_tabular_outcomes();
  }
  if (!cfg.pi_b_path.empty()) out.pi_b = TabularPolicy::from_json(load_json(cfg.pi_b_path));
  if (!cfg.pi_e_path.empty()) {
    out.pi_e = TabularPolicy::from_json(load_json(cfg.pi_e_path));
    out.has_pi_e = true;
  }
  out.mdp.validate();
  out.pi_b.validate();
  if (out.has_pi_e) out.pi_e.validate();
  return out;
}

// ============================================================================
// Explanation flows
// ============================================================================

struct OutcomeMeta {
  std::vector<std::string> names;
  std::vector<VerdictPhrases> phrases;
  std::vector<char> higher;
};

template <class State>
OutcomeMeta outcome_meta(const OutcomeSet<State>& outcomes) {
  OutcomeMeta m;
  for (const auto& fn : outcomes) {
    m.names.push_back(fn.name);
    m.phrases.push_back(fn.phrases);
    m.higher.push_back(fn.higher_is_better ? 1 : 0);
  }
  return m;
}

std::string toy_state_name(int s) { return "s_" + std::to_string(s); }

/// Exploratory behavioral batch: 1000 rollouts of the 0.5-soft mixture of
/// the behavior policy, starts drawn from the initial distribution.
std::vector<Trajectory<int>> behavior_batch(const TabularMdp& mdp, const TabularPolicy& pi_b,
                                            std::uint64_t seed) {
  const int n_traj = 1000;
  TabularPolicy soft = make_epsilon_soft(pi_b, 0.5);
  TabularEnv env{mdp};
  Rng start_rng(derive_seed(seed, 3));
  std::vector<Trajectory<int>> batch;
  batch.reserve(n_traj);
  for (int i = 0; i < n_traj; ++i) {
    int s0 = start_rng.sample_discrete(mdp.initial_dist);
    batch.push_back(rollout(env, soft, s0, mdp.max_steps, derive_seed(derive_seed(seed, 5), i)));
  }
  return batch;
}

/// Full tabular explanation of pi_e against pi_b: branching divergence
/// collection from every start in the initial support, a one-hot region
/// classifier, exact baseline outcomes, and bootstrap estimates for pi_e
/// from the (shared) behavioral batch.
Explanation explain_tabular(const TabularMdp& mdp, const TabularPolicy& pi_b,
                            const TabularPolicy& pi_e, const OutcomeSet<int>& outcomes,
                            const CliConfig& cfg,
                            const std::vector<Trajectory<int>>* shared_batch) {
  TabularEnv env{mdp};
  OutcomeMeta meta = outcome_meta(outcomes);
  std::vector<int> starts;
  for (int s = 0; s < mdp.n_states; ++s)
    if (mdp.initial_dist[std::size_t(s)] > 0.0 && !mdp.is_absorbing(s)) starts.push_back(s);
  require(!starts.empty(), ErrorCode::InvalidConfig, "no non-absorbing start states");

  DivergenceConfig dcfg = divergence_config(cfg);
  std::vector<LabeledStateSet<int>> parts;
  for (int s0 : starts)
    parts.push_back(collect_diverging_states(pi_b, pi_e, env, s0, dcfg,
                                             derive_seed(derive_seed(cfg.seed, 2),
                                                         std::uint64_t(s0))));
  LabeledStateSet<int> merged = merge_labeled_sets(parts);

  if (merged.n_diverging() == 0) {
    std::string desc = starts.size() == 1
                           ? toy_state_name(starts.front())
                           : toy_state_name(starts.front()) + "..." + toy_state_name(starts.back());
    return agreement_explanation(meta.names, meta.phrases, meta.higher, desc);
  }

  std::function<FeatureVec(const int&)> feats = [&](const int& s) {
    return one_hot_features(s, mdp.n_states);
  };
  DivergenceModel model =
      train_divergence_model<int>(merged, feats, FeatureSpace::one_hot(mdp.n_states), {});

  std::vector<Trajectory<int>> local_batch;
  const std::vector<Trajectory<int>>* batch = shared_batch;
  if (batch == nullptr) {
    local_batch = behavior_batch(mdp, pi_b, cfg.seed);
    batch = &local_batch;
  }

  std::map<int, std::vector<double>> point_b;
  for (int s0 : starts) point_b[s0] = expected_outcomes_exact(mdp, pi_b, s0, outcomes);
  std::function<OutcomeVerdict(const int&)> verdict_of = [&](const int& s0) {
    OutcomeEstimate est = bootstrap_outcome_ci(*batch, pi_e, s0, outcomes, cfg.bootstrap_b,
                                               100, cfg.ci_level,
                                               derive_seed(derive_seed(cfg.seed, 4),
                                                           std::uint64_t(s0)));
    return compare_outcomes(point_b.at(s0), est, meta.higher);
  };

  std::function<std::string(const int&)> name = [](const int& s) { return toy_state_name(s); };
  return build_explanation<TabularEnv, TabularPolicy>(env, pi_e, model, feats, starts,
                                                      verdict_of, outcomes, name, {});
}

/// Start states for the navigation flows: the canonical start plus uniform
/// draws from the initial box.
std::vector<Vec2> nav_starts(const BoxNavMdp& mdp, const RegionCollectConfig& rcfg,
                             std::uint64_t seed) {
  std::vector<Vec2> starts{rcfg.canonical_start};
  Rng rng(derive_seed(seed, 1));
  for (int i = 0; i < rcfg.n_start_draws; ++i) starts.push_back(mdp.sample_start(rng));
  return starts;
}

/// Navigation explanation of pi_e against pi_b. Verdicts come from single
/// deterministic rollouts per start (the domain and policies are
/// deterministic, so the point estimates are exact).
Explanation explain_nav_vs(const BoxNavMdp& mdp, const RulePolicy& pi_b, const RulePolicy& pi_e,
                           const OutcomeSet<Vec2>& outcomes, const RegionCollectConfig& rcfg,
                           std::uint64_t seed) {
  OutcomeMeta meta = outcome_meta(outcomes);
  std::vector<Vec2> starts = nav_starts(mdp, rcfg, seed);

  std::vector<LabeledStateSet<Vec2>> parts;
  for (std::size_t si = 0; si < starts.size(); ++si)
    parts.push_back(collect_diverging_states(pi_b, pi_e, mdp, starts[si], rcfg.divergence,
                                             derive_seed(derive_seed(seed, 2), si)));
  LabeledStateSet<Vec2> merged = merge_labeled_sets(parts);
  if (merged.n_diverging() == 0)
    return agreement_explanation(meta.names, meta.phrases, meta.higher, "the initial region");

  std::function<FeatureVec(const Vec2&)> feats = nav_features;
  DivergenceModel model = train_divergence_model<Vec2>(
      merged, feats, FeatureSpace::nav_grid(rcfg.grid), rcfg.budget);

  std::function<OutcomeVerdict(const Vec2&)> verdict_of = [&](const Vec2& s0) {
    Trajectory<Vec2> tb = rollout(mdp, pi_b, s0, mdp.max_steps_cap, 0);
    Trajectory<Vec2> te = rollout(mdp, pi_e, s0, mdp.max_steps_cap, 0);
    std::vector<double> point_b;
    OutcomeEstimate est;
    for (const auto& fn : outcomes) {
      point_b.push_back(outcome_total(fn, tb));
      double v = outcome_total(fn, te);
      est.point.push_back(v);
      est.lower.push_back(v);
      est.upper.push_back(v);
    }
    est.ci_level = 1.0;  // deterministic rollouts: the interval is exact
    est.unreliable = !tb.terminated || !te.terminated;
    return compare_outcomes(point_b, est, meta.higher);
  };

  return build_explanation<BoxNavMdp, RulePolicy>(mdp, pi_e, model, feats, starts, verdict_of,
                                                  outcomes, nullptr, rcfg.budget);
}

RenderOptions tabular_render_options() {
  RenderOptions opts;
  opts.style = RenderStyle::kTabular;
  opts.action_text = [](int a) { return std::to_string(a); };
  return opts;
}

RenderOptions nav_render_options() {
  RenderOptions opts;
  opts.style = RenderStyle::kNav;
  opts.action_text = [](int a) { return std::string(nav_action_word(a)); };
  return opts;
}

void write_explanation(const CliConfig& cfg, const std::string& stem, const Explanation& expl,
                       const RenderOptions& opts, bool echo) {
  std::string text = render(expl, opts);
  write_file(cfg.out_dir, stem + ".txt", text);
  write_json_file(cfg.out_dir, stem + ".json", expl.to_json());
  if (echo) std::cout << text;
}

// ============================================================================
// Region pipeline (navigation optimization)
// ============================================================================

struct RegionPipeline {
  RegionSet regions;
  RegionMdp rmdp;           // valid only when !regions.regions.empty()
  TabularPolicy region_pi_b;
};

RegionCollectConfig region_config(const CliConfig& cfg) {
  RegionCollectConfig rcfg;
  rcfg.divergence = divergence_config(cfg);
  return rcfg;
}

std::vector<RulePolicy> resolve_candidates(const CliConfig& cfg, const NavDomain& dom) {
  std::vector<RulePolicy> cands;
  for (const auto& path : cfg.candidate_paths)
    cands.push_back(RulePolicy::from_json(load_json(path)));
  if (cands.empty()) cands = {dom.pi_e1, dom.pi_e2};
  return cands;
}

RegionPipeline build_pipeline(const BoxNavMdp& mdp, const RulePolicy& pi_b,
                              const std::vector<RulePolicy>& candidates,
                              const RegionCollectConfig& rcfg, std::uint64_t seed) {
  RegionPipeline p;
  p.regions = collect_regions(pi_b, candidates, mdp, rcfg, seed);
  if (p.regions.regions.empty()) return p;
  RegionTrajectories trajs = build_region_trajectories(mdp, pi_b, candidates, p.regions, rcfg);
  p.rmdp = build_region_mdp(trajs, p.regions);
  std::vector<int> actions = p.rmdp.action_b;
  actions.push_back(0);  // absorbing row, never used
  p.region_pi_b = TabularPolicy::deterministic(p.rmdp.mdp.n_states, p.rmdp.mdp.n_actions,
                                               actions);
  return p;
}

Json region_mdp_json(const RegionMdp& rmdp) {
  Json samples = Json::array();
  Json covered = Json::array();
  for (int k = 0; k < int(rmdp.samples.size()); ++k) {
    samples.push_back(rmdp.samples[std::size_t(k)]);
    Json row = Json::array();
    for (char c : rmdp.covered[std::size_t(k)]) row.push_back(c != 0);
    covered.push_back(row);
  }
  Json actions = Json::array();
  for (int a : rmdp.action_b) actions.push_back(nav_action_name(a));
  return {{"mdp", rmdp.mdp.to_json()},
          {"action_b", actions},
          {"samples", samples},
          {"covered", covered}};
}

// ============================================================================
// Subcommands
// ============================================================================

int cmd_explain(const CliConfig& cfg) {
  if (cfg.domain == "nav2d") {
    NavDomain dom = make_nav_domain();
    RulePolicy pi_b = cfg.pi_b_path.empty() ? dom.pi_b
                                            : RulePolicy::from_json(load_json(cfg.pi_b_path));
    RulePolicy pi_e = cfg.pi_e_path.empty() ? dom.pi_e1
                                            : RulePolicy::from_json(load_json(cfg.pi_e_path));
    Explanation expl =
        explain_nav_vs(dom.mdp, pi_b, pi_e, dom.outcomes, region_config(cfg), cfg.seed);
    write_explanation(cfg, "explanation", expl, nav_render_options(), true);
    return 0;
  }
  TabularBundle b = resolve_tabular(cfg);
  require(b.has_pi_e, ErrorCode::InvalidConfig, "explain needs --pi-e (or a bundled domain)");
  Explanation expl = explain_tabular(b.mdp, b.pi_b, b.pi_e, b.outcomes, cfg, nullptr);
  write_explanation(cfg, "explanation", expl, tabular_render_options(), true);
  return 0;
}

int cmd_optimize(const CliConfig& cfg) {
  std::vector<double> kappas = parse_kappas(cfg.kappa_args);
  if (cfg.domain == "nav2d") {
    NavDomain dom = make_nav_domain();
    RulePolicy pi_b = cfg.pi_b_path.empty() ? dom.pi_b
                                            : RulePolicy::from_json(load_json(cfg.pi_b_path));
    std::vector<RulePolicy> candidates = resolve_candidates(cfg, dom);
    RegionCollectConfig rcfg = region_config(cfg);
    RegionPipeline pipe = build_pipeline(dom.mdp, pi_b, candidates, rcfg, cfg.seed);
    write_json_file(cfg.out_dir, "regions.json", pipe.regions.to_json());

    if (pipe.regions.regions.empty()) {
      // Candidates never disagree with the behavior policy: the frontier is
      // flat and every budget returns the behavior policy unchanged.
      Trajectory<Vec2> tr = rollout(dom.mdp, pi_b, dom.canonical_start,
                                    dom.mdp.max_steps_cap, 0);
      std::vector<FrontierRow> rows;
      for (double k : kappas)
        rows.push_back({k, 0.0, 0, tr.total_reward(), {}});
      write_file(cfg.out_dir, "frontier.csv", frontier_csv(rows));
      OutcomeMeta meta = outcome_meta(dom.outcomes);
      for (double k : kappas) {
        std::string suffix = fmt_short(k);
        write_json_file(cfg.out_dir, "policy_k" + suffix + ".json", pi_b.to_json());
        Explanation expl = agreement_explanation(meta.names, meta.phrases, meta.higher,
                                                 "the initial region");
        write_explanation(cfg, "explanation_k" + suffix, expl, nav_render_options(), false);
      }
      return 0;
    }

    write_json_file(cfg.out_dir, "region_mdp.json", region_mdp_json(pipe.rmdp));
    std::vector<FrontierRow> sweep = sweep_kappa(pipe.rmdp.mdp, pipe.region_pi_b, kappas);
    write_file(cfg.out_dir, "frontier.csv", frontier_csv(sweep));
    for (const auto& row : sweep) {
      std::string suffix = fmt_short(row.kappa);
      RulePolicy lifted = lift_policy(row.policy, pi_b, pipe.regions);
      write_json_file(cfg.out_dir, "policy_k" + suffix + ".json", lifted.to_json());
      Explanation expl =
          explain_nav_vs(dom.mdp, pi_b, lifted, dom.outcomes, rcfg, cfg.seed);
      write_explanation(cfg, "explanation_k" + suffix, expl, nav_render_options(), false);
    }
    return 0;
  }

  TabularBundle b = resolve_tabular(cfg);
  std::vector<FrontierRow> sweep = sweep_kappa(b.mdp, b.pi_b, kappas);
  write_file(cfg.out_dir, "frontier.csv", frontier_csv(sweep));
  std::vector<Trajectory<int>> batch = behavior_batch(b.mdp, b.pi_b, cfg.seed);
  for (const auto& row : sweep) {
    std::string suffix = fmt_short(row.kappa);
    write_json_file(cfg.out_dir, "policy_k" + suffix + ".json", row.policy.to_json());
    Explanation expl = explain_tabular(b.mdp, b.pi_b, row.policy, b.outcomes, cfg, &batch);
    write_explanation(cfg, "explanation_k" + suffix, expl, tabular_render_options(), false);
  }
  return 0;
}

/// Budgeted sweep over integer budgets 0,1,2,... until the unconstrained
/// optimum is reached (the region/toy scale keeps this tiny).
std::vector<FrontierRow> adaptive_integer_sweep(const TabularMdp& mdp,
                                                const TabularPolicy& pi_b,
                                                double target_return) {
  std::vector<FrontierRow> rows;
  for (int k = 0; k <= 256; ++k) {
    std::vector<FrontierRow> one = sweep_kappa(mdp, pi_b, {double(k)});
    rows.push_back(one.front());
    if (rows.back().expected_return >= target_return - 1e-9) break;
  }
  return rows;
}

struct ComparePoints {
  std::vector<FrontierRow> cmdp;
  std::vector<ImprovementStep> pi;
};

std::string compare_csv(const ComparePoints& pts) {
  std::string out = "method,kappa,expected_cost,aggregate_changes,expected_return\n";
  for (const auto& r : pts.cmdp)
    out += "cmdp," + std::string(fmt_short(r.kappa)) + "," + fmt_g17(r.expected_cost) + "," +
           std::to_string(r.aggregate_changes) + "," + fmt_g17(r.expected_return) + "\n";
  for (const auto& s : pts.pi)
    out += "pi,," + fmt_g17(s.expected_cost) + "," + std::to_string(s.changed_states) + "," +
           fmt_g17(s.expected_return) + "\n";
  return out;
}

bool subset_holds(const ComparePoints& pts) {
  for (const auto& s : pts.pi) {
    bool found = false;
    for (const auto& r : pts.cmdp)
      found = found || (std::abs(r.expected_cost - s.expected_cost) <= 1e-6 &&
                        std::abs(r.expected_return - s.expected_return) <= 1e-6);
    if (!found) return false;
  }
  return true;
}

int cmd_compare_baseline(const CliConfig& cfg) {
  ComparePoints pts;
  if (cfg.domain == "nav2d") {
    NavDomain dom = make_nav_domain();
    RulePolicy pi_b = cfg.pi_b_path.empty() ? dom.pi_b
                                            : RulePolicy::from_json(load_json(cfg.pi_b_path));
    std::vector<RulePolicy> candidates = resolve_candidates(cfg, dom);
    RegionPipeline pipe = build_pipeline(dom.mdp, pi_b, candidates, region_config(cfg),
                                         cfg.seed);
    if (pipe.regions.regions.empty()) {
      Trajectory<Vec2> tr = rollout(dom.mdp, pi_b, dom.canonical_start,
                                    dom.mdp.max_steps_cap, 0);
      pts.cmdp.push_back({0.0, 0.0, 0, tr.total_reward(), {}});
      pts.pi.push_back({{}, 0.0, 0, tr.total_reward()});
    } else {
      CmdpInstance inst = make_cmdp(pipe.rmdp.mdp, pipe.region_pi_b,
                                    std::numeric_limits<double>::infinity());
      ExhaustiveBest best =
          brute_force_cmdp(pipe.rmdp.mdp, inst.cost,
                           std::numeric_limits<double>::infinity(), &inst.allowed);
      pts.cmdp = adaptive_integer_sweep(pipe.rmdp.mdp, pipe.region_pi_b, best.expected_return);
      pts.pi = policy_iteration_trace(pipe.rmdp.mdp, pipe.region_pi_b, &inst.allowed);
    }
  } else {
    TabularBundle b = resolve_tabular(cfg);
    CmdpInstance inst = make_cmdp(b.mdp, b.pi_b, std::numeric_limits<double>::infinity());
    ExhaustiveBest best = brute_force_cmdp(b.mdp, inst.cost,
                                           std::numeric_limits<double>::infinity(),
                                           &inst.allowed);
    pts.cmdp = adaptive_integer_sweep(b.mdp, b.pi_b, best.expected_return);
    pts.pi = policy_iteration_trace(b.mdp, b.pi_b, &inst.allowed);
  }
  write_file(cfg.out_dir, "compare.csv", compare_csv(pts));
  write_json_file(cfg.out_dir, "compare_meta.json", Json{{"subset_holds", subset_holds(pts)}});
  return 0;
}

int cmd_domains(const std::string& action, const CliConfig& cfg) {
  if (action == "list") {
    std::cout << "toy\nnav2d\n";
    return 0;
  }
  require(action == "export", ErrorCode::InvalidConfig,
          "domains action must be list or export");
  if (cfg.domain == "toy") {
    ToyDomain dom = make_toy_mdp();
    write_json_file(cfg.out_dir, "mdp.json", dom.mdp.to_json());
    write_json_file(cfg.out_dir, "pi_b.json", dom.pi_b.to_json());
    write_json_file(cfg.out_dir, "pi_e.json", dom.pi_e.to_json());
    return 0;
  }
  require(cfg.domain == "nav2d", ErrorCode::InvalidConfig,
          "unknown domain: " + cfg.domain);
  NavDomain dom = make_nav_domain();
  write_json_file(cfg.out_dir, "pi_b.json", dom.pi_b.to_json());
  write_json_file(cfg.out_dir, "pi_e1.json", dom.pi_e1.to_json());
  write_json_file(cfg.out_dir, "pi_e2.json", dom.pi_e2.to_json());
  return 0;
}

void check_domain_choice(const CliConfig& cfg, bool allow_custom_mdp) {
  if (!cfg.domain.empty()) {
    require(cfg.mdp_path.empty(), ErrorCode::InvalidConfig,
            "--domain and --mdp are mutually exclusive");
    require(cfg.domain == "toy" || cfg.domain == "nav2d", ErrorCode::InvalidConfig,
            "unknown domain: " + cfg.domain);
    return;
  }
  require(allow_custom_mdp && !cfg.mdp_path.empty(), ErrorCode::InvalidConfig,
          "one of --domain or --mdp is required");
}

}  // namespace

// ============================================================================
// Argument parsing
// ============================================================================

int run_cli(int argc, char** argv) {
  CLI::App app{"Contrastive policy explanation and budgeted policy improvement"};
  app.require_subcommand(1);

  CliConfig cfg;
  std::string domains_action;

  auto add_common = [&](CLI::App* sub, bool with_mdp) {
    sub->add_option("--domain", cfg.domain, "Bundled domain name (toy, nav2d)");
    if (with_mdp) sub->add_option("--mdp", cfg.mdp_path, "Custom tabular MDP JSON");
    sub->add_option("--pi-b", cfg.pi_b_path, "Behavior policy JSON");
    sub->add_option("--kappa-pi", cfg.kappa_pi, "Action-probability gap threshold");
    sub->add_option("--kappa-t", cfg.kappa_t, "Transition-probability gap threshold");
    sub->add_option("--d-max", cfg.d_max, "Maximum branching depth");
    sub->add_option("--seed", cfg.seed, "Run seed (required)")->required();
    sub->add_option("--out", cfg.out_dir, "Output directory");
  };

  CLI::App* ex = app.add_subcommand("explain", "Explain how two policies differ");
  add_common(ex, true);
  ex->add_option("--pi-e", cfg.pi_e_path, "Alternative policy JSON");
  ex->add_option("--bootstrap-b", cfg.bootstrap_b, "Bootstrap replicates");
  ex->add_option("--ci-level", cfg.ci_level, "Confidence level");

  CLI::App* opt = app.add_subcommand("optimize", "Sweep deviation budgets");
  add_common(opt, true);
  opt->add_option("--candidates", cfg.candidate_paths, "Candidate policy JSONs (nav2d)");
  opt->add_option("--kappa", cfg.kappa_args, "Budget values (repeatable; inf allowed)")
      ->required();
  opt->add_option("--bootstrap-b", cfg.bootstrap_b, "Bootstrap replicates");
  opt->add_option("--ci-level", cfg.ci_level, "Confidence level");

  CLI::App* cmp = app.add_subcommand("compare-baseline",
                                     "Compare the budget sweep against policy iteration");
  add_common(cmp, true);
  cmp->add_option("--candidates", cfg.candidate_paths, "Candidate policy JSONs (nav2d)");

  CLI::App* doms = app.add_subcommand("domains", "List or export bundled domains");
  doms->add_option("action", domains_action, "list or export")->required();
  doms->add_option("--domain", cfg.domain, "Domain to export");
  doms->add_option("--out", cfg.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (doms->parsed()) {
      if (domains_action == "export")
        require(!cfg.domain.empty(), ErrorCode::InvalidConfig, "export needs --domain");
      return cmd_domains(domains_action, cfg);
    }
    check_domain_choice(cfg, true);
    if (ex->parsed()) return cmd_explain(cfg);
    if (opt->parsed()) return cmd_optimize(cfg);
    return cmd_compare_baseline(cfg);
  } catch (const CpkError& e) {
    Json err{{"error", {{"code", error_code_name(e.code())}, {"message", e.what()}}}};
    std::cout << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    Json err{{"error", {{"code", "Internal"}, {"message", e.what()}}}};
    std::cout << err.dump() << "\n";
    return 1;
  }
}

}  // namespace cpk
