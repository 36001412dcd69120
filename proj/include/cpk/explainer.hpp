// explainer.hpp — global contrastive explanations.
//
// Combines three ingredients into one textual artifact: the diverging
// regions learned from a policy comparison, the per-start sequence of those
// regions visited under the alternative policy (the diverging path), and the
// three-valued outcome verdicts. Starts that share (path, verdict) collapse
// into one case; a rule classifier over the start states names each case's
// initial region.
#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cpk/divergence.hpp"
#include "cpk/mdp.hpp"
#include "cpk/outcome_eval.hpp"
#include "cpk/rule_learner.hpp"

namespace cpk {

// ============================================================================
// Divergence model (region classifier + action pairs)
// ============================================================================

/// A trained region classifier together with the (behavior, alternative)
/// argmax action pair behind each nonzero label.
struct DivergenceModel {
  DnfRuleClassifier classifier;
  std::map<int, std::pair<int, int>> label_actions;
};

/// Fits the region classifier on a labeled divergence set. Requires at least
/// one diverging entry (callers handle the all-agreeing case separately).
template <class State>
DivergenceModel train_divergence_model(
    const LabeledStateSet<State>& labeled,
    const std::function<FeatureVec(const State&)>& features, const FeatureSpace& space,
    const RuleBudget& budget = {}) {
  require(labeled.n_diverging() > 0, ErrorCode::EmptyBatch,
          "train_divergence_model: no diverging entries");
  std::vector<FeatureVec> rows;
  std::vector<int> labels;
  rows.reserve(labeled.entries.size());
  for (const auto& e : labeled.entries) {
    rows.push_back(features(e.state));
    labels.push_back(e.label);
  }
  DivergenceModel model;
  model.classifier = learn_multiclass(rows, labels, space, budget);
  for (const auto& [pair, label] : labeled.action_pair_index)
    model.label_actions[label] = pair;
  return model;
}

/// Merges per-start collections into one set: first occurrence of a state
/// wins, and labels are re-keyed so equal action pairs share one label
/// across all parts.
template <class State>
LabeledStateSet<State> merge_labeled_sets(const std::vector<LabeledStateSet<State>>& parts) {
  LabeledStateSet<State> out;
  std::set<State> seen;
  for (const auto& part : parts)
    for (const auto& e : part.entries) {
      if (seen.count(e.state)) continue;
      seen.insert(e.state);
      LabeledEntry<State> ne = e;
      if (e.label > 0) ne.label = out.label_for(e.action_b, e.action_e);
      out.entries.push_back(ne);
    }
  return out;
}

// ============================================================================
// Explanation structure
// ============================================================================

/// One visited diverging region along a rollout of the alternative policy.
struct PathEntry {
  int label = 0;      // classifier label (action-pair class)
  int clause = 0;     // clause index within the label's rule set
  std::string desc;   // rendered region text
  int action_b = -1;  // behavior policy's action in the region
  int action_e = -1;  // alternative policy's action in the region
};

struct ExplanationCase {
  int key = 0;             // (path, verdict) group id, first-encounter order
  std::string start;       // initial-region text for this case
  std::vector<PathEntry> path;
  OutcomeVerdict verdict;
  bool agreement = false;  // empty path: the policies act identically
};

/// The full explanation plus the outcome metadata needed to render it.
struct Explanation {
  std::vector<ExplanationCase> cases;
  std::vector<std::string> outcome_names;
  std::vector<VerdictPhrases> phrases;
  std::vector<char> higher_is_better;

  Json to_json() const;
  static Explanation from_json(const Json& j);
};

// ============================================================================
// Rendering
// ============================================================================

enum class RenderStyle {
  kTabular,  // "in region R, doing action A instead of action B … will lead to …"
  kNav,      // "going A instead of B when reaching region R, …, will result in …"
};

struct RenderOptions {
  RenderStyle style = RenderStyle::kTabular;
  std::function<std::string(int)> action_text;  // action id -> display text
};

/// Renders one paragraph per case, separated by ";\n\n" with a final ".".
std::string render(const Explanation& expl, const RenderOptions& opts);

// ============================================================================
// Path computation and case assembly
// ============================================================================

/// Follows the alternative policy's argmax actions through the most probable
/// transitions from s0 and records each visited state whose region label is
/// nonzero; consecutive steps in the same (label, clause) region collapse
/// into one entry. Throws HorizonExceeded when the walk does not absorb.
template <class Env, class PolicyE>
std::vector<PathEntry> diverging_path(
    const Env& env, const PolicyE& pi_e, const DivergenceModel& model,
    const std::function<FeatureVec(const typename Env::State&)>& features,
    const typename Env::State& s0, int max_steps) {
  require(env.valid_state(s0), ErrorCode::InvalidState, "diverging_path: s0 invalid");
  std::vector<PathEntry> path;
  auto s = s0;
  for (int t = 0; t <= max_steps; ++t) {
    if (env.is_absorbing(s)) return path;
    auto match = model.classifier.classify_with_clause(features(s));
    if (match.label != 0 &&
        (path.empty() || path.back().label != match.label || path.back().clause != match.clause_idx)) {
      PathEntry entry;
      entry.label = match.label;
      entry.clause = match.clause_idx;
      entry.desc = match.rule_idx >= 0
                       ? describe_clause(model.classifier.ordered_rules[std::size_t(match.rule_idx)]
                                             .clauses[std::size_t(match.clause_idx)],
                                         model.classifier.space)
                       : "otherwise";
      auto it = model.label_actions.find(match.label);
      require(it != model.label_actions.end(), ErrorCode::InvalidState,
              "diverging_path: label has no action pair");
      entry.action_b = it->second.first;
      entry.action_e = it->second.second;
      path.push_back(entry);
    }
    s = env.most_probable_next(s, pi_e.argmax_action(s));
  }
  fail(ErrorCode::HorizonExceeded, "diverging_path: rollout did not absorb");
}

namespace detail {

/// Non-template core: groups per-start (path, verdict) pairs into keys,
/// trains the start-region classifier when more than one key exists, and
/// expands each key into rendered cases. `state_names` may be empty (the
/// single/default case then reads "the initial region").
Explanation assemble_explanation(const std::vector<std::vector<PathEntry>>& paths,
                                 const std::vector<OutcomeVerdict>& verdicts,
                                 const std::vector<FeatureVec>& start_rows,
                                 const FeatureSpace& space,
                                 const std::vector<std::string>& state_names,
                                 const std::vector<std::string>& outcome_names,
                                 const std::vector<VerdictPhrases>& phrases,
                                 const std::vector<char>& higher_is_better,
                                 const RuleBudget& budget);

}  // namespace detail

/// Builds the explanation for pi_e versus the behavior policy behind
/// `model`: computes each start's diverging path and verdict, groups equal
/// (path, verdict) keys, and names each group's initial region with a
/// learned rule. `state_name` may be null; it supplies display names for
/// grouped starts (e.g. "s_6...s_10").
template <class Env, class PolicyE>
Explanation build_explanation(
    const Env& env, const PolicyE& pi_e, const DivergenceModel& model,
    const std::function<FeatureVec(const typename Env::State&)>& features,
    const std::vector<typename Env::State>& p0_samples,
    const std::function<OutcomeVerdict(const typename Env::State&)>& verdict_of,
    const OutcomeSet<typename Env::State>& outcomes,
    const std::function<std::string(const typename Env::State&)>& state_name = nullptr,
    const RuleBudget& budget = {}) {
  require(!p0_samples.empty(), ErrorCode::EmptyBatch, "build_explanation: no start samples");
  std::vector<std::vector<PathEntry>> paths;
  std::vector<OutcomeVerdict> verdicts;
  std::vector<FeatureVec> rows;
  std::vector<std::string> names;
  for (const auto& s0 : p0_samples) {
    paths.push_back(diverging_path(env, pi_e, model, features, s0, env.max_steps()));
    verdicts.push_back(verdict_of(s0));
    rows.push_back(features(s0));
    if (state_name) names.push_back(state_name(s0));
  }
  std::vector<std::string> outcome_names;
  std::vector<VerdictPhrases> phrases;
  std::vector<char> higher;
  for (const auto& fn : outcomes) {
    outcome_names.push_back(fn.name);
    phrases.push_back(fn.phrases);
    higher.push_back(fn.higher_is_better ? 1 : 0);
  }
  return detail::assemble_explanation(paths, verdicts, rows, model.classifier.space, names,
                                      outcome_names, phrases, higher, budget);
}

/// Degenerate explanation for an all-agreeing comparison: a single
/// agreement case covering every start.
Explanation agreement_explanation(const std::vector<std::string>& outcome_names,
                                  const std::vector<VerdictPhrases>& phrases,
                                  const std::vector<char>& higher_is_better,
                                  const std::string& start_desc);

}  // namespace cpk
