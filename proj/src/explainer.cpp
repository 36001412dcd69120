// explainer.cpp — case assembly, rendering, and serialization for global
// contrastive explanations.

#include "cpk/explainer.hpp"

#include <algorithm>

namespace cpk {

// ============================================================================
// Case assembly
// ============================================================================

namespace detail {

namespace {

/// Display text for a group of starts: "s_6...s_10" for a range, the single
/// name when the group has one member, or a fixed fallback when the caller
/// provided no names.
std::string group_desc(const std::vector<std::string>& names) {
  if (names.empty()) return "the initial region";
  if (names.size() == 1) return names.front();
  return names.front() + "..." + names.back();
}

}  // namespace

Explanation assemble_explanation(const std::vector<std::vector<PathEntry>>& paths,
                                 const std::vector<OutcomeVerdict>& verdicts,
                                 const std::vector<FeatureVec>& start_rows,
                                 const FeatureSpace& space,
                                 const std::vector<std::string>& state_names,
                                 const std::vector<std::string>& outcome_names,
                                 const std::vector<VerdictPhrases>& phrases,
                                 const std::vector<char>& higher_is_better,
                                 const RuleBudget& budget) {
  const std::size_t n = paths.size();
  require(n > 0 && verdicts.size() == n && start_rows.size() == n,
          ErrorCode::DimensionMismatch, "assemble_explanation: input sizes differ");
  require(state_names.empty() || state_names.size() == n, ErrorCode::DimensionMismatch,
          "assemble_explanation: state_names size");

  // Group starts by (path signature, raw verdict); key ids follow first
  // encounter over the sample order.
  struct Key {
    std::vector<std::pair<int, int>> sig;
    std::vector<int> raw;
  };
  std::vector<Key> keys;
  std::vector<int> key_of(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    Key k;
    for (const auto& e : paths[i]) k.sig.emplace_back(e.label, e.clause);
    k.raw = verdicts[i].raw;
    int id = -1;
    for (std::size_t j = 0; j < keys.size(); ++j)
      if (keys[j].sig == k.sig && keys[j].raw == k.raw) {
        id = int(j);
        break;
      }
    if (id < 0) {
      id = int(keys.size());
      keys.push_back(std::move(k));
    }
    key_of[i] = id;
  }

  Explanation out;
  out.outcome_names = outcome_names;
  out.phrases = phrases;
  out.higher_is_better = higher_is_better;

  auto first_sample_of = [&](int key) {
    for (std::size_t i = 0; i < n; ++i)
      if (key_of[i] == key) return i;
    fail(ErrorCode::InvalidState, "assemble_explanation: empty key group");
  };
  auto names_of = [&](int key) {
    std::vector<std::string> out_names;
    if (state_names.empty()) return out_names;
    for (std::size_t i = 0; i < n; ++i)
      if (key_of[i] == key) out_names.push_back(state_names[i]);
    return out_names;
  };
  auto grouped_case = [&](int key) {
    std::size_t i = first_sample_of(key);
    ExplanationCase c;
    c.key = key;
    c.start = group_desc(names_of(key));
    c.path = paths[i];
    c.verdict = verdicts[i];
    c.agreement = c.path.empty();
    return c;
  };

  if (keys.size() == 1) {
    out.cases.push_back(grouped_case(0));
    return out;
  }

  // Name each group's initial region with a rule classifier over the starts;
  // the classifier's default class stays grouped, every other class expands
  // into one case per learned clause.
  std::vector<int> labels(key_of.begin(), key_of.end());
  DnfRuleClassifier h_exp = learn_multiclass(start_rows, labels, space, budget);
  for (int key = 0; key < int(keys.size()); ++key) {
    if (key == h_exp.default_label) {
      out.cases.push_back(grouped_case(key));
      continue;
    }
    const DnfRuleSet* rs = nullptr;
    for (const auto& cand : h_exp.ordered_rules)
      if (cand.predicted_label == key) {
        rs = &cand;
        break;
      }
    require(rs != nullptr, ErrorCode::InvalidState,
            "assemble_explanation: key without a rule set");
    std::size_t i = first_sample_of(key);
    for (const auto& clause : rs->clauses) {
      ExplanationCase c;
      c.key = key;
      c.start = describe_clause(clause, space);
      c.path = paths[i];
      c.verdict = verdicts[i];
      c.agreement = c.path.empty();
      out.cases.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

Explanation agreement_explanation(const std::vector<std::string>& outcome_names,
                                  const std::vector<VerdictPhrases>& phrases,
                                  const std::vector<char>& higher_is_better,
                                  const std::string& start_desc) {
  Explanation out;
  out.outcome_names = outcome_names;
  out.phrases = phrases;
  out.higher_is_better = higher_is_better;
  ExplanationCase c;
  c.key = 0;
  c.start = start_desc;
  c.verdict.raw.assign(outcome_names.size(), 0);
  c.verdict.oriented.assign(outcome_names.size(), 0);
  c.agreement = true;
  out.cases.push_back(c);
  return out;
}

// ============================================================================
// Rendering
// ============================================================================

namespace {

std::string verdict_text(const Explanation& expl, const ExplanationCase& c) {
  std::string out;
  for (std::size_t m = 0; m < expl.outcome_names.size(); ++m) {
    const auto& ph = expl.phrases[m];
    std::string part = c.verdict.raw[m] > 0 ? ph.more
                       : c.verdict.raw[m] < 0 ? ph.less
                                              : ph.unknown;
    if (!out.empty()) {
      // "but" marks a goodness reversal between adjacent outcomes.
      bool flip = c.verdict.oriented[m - 1] * c.verdict.oriented[m] < 0;
      out += flip ? " but " : " and ";
    }
    out += part;
  }
  return out;
}

std::string case_text(const Explanation& expl, const ExplanationCase& c,
                      const RenderOptions& opts) {
  auto act = [&](int a) {
    return opts.action_text ? opts.action_text(a) : std::to_string(a);
  };
  const bool nav = opts.style == RenderStyle::kNav;
  std::string head = nav ? "Starting from the initial region"
                         : "Starting from initial region " + c.start;
  if (c.agreement) return head + ", two policies, π_b and π_e act the same";

  std::string body;
  for (std::size_t i = 0; i < c.path.size(); ++i) {
    const auto& e = c.path[i];
    if (nav) {
      if (i > 0) body += ", then ";
      body += "going " + act(e.action_e) + " instead of " + act(e.action_b) +
              " when reaching region " + e.desc;
    } else {
      if (i > 0) body += " and then ";
      body += "in region " + e.desc + ", doing action " + act(e.action_e) +
              " instead of action " + act(e.action_b);
    }
  }
  std::string tail = (nav ? ", will result in " : " will lead to ") + verdict_text(expl, c);
  return head + ", " + body + tail;
}

}  // namespace

std::string render(const Explanation& expl, const RenderOptions& opts) {
  std::string out;
  for (std::size_t i = 0; i < expl.cases.size(); ++i) {
    if (i > 0) out += ";\n\n";
    out += case_text(expl, expl.cases[i], opts);
  }
  out += ".\n";
  return out;
}

// ============================================================================
// Serialization
// ============================================================================

Json Explanation::to_json() const {
  Json jcases = Json::array();
  for (const auto& c : cases) {
    Json jpath = Json::array();
    for (const auto& e : c.path)
      jpath.push_back({{"label", e.label},
                       {"clause", e.clause},
                       {"desc", e.desc},
                       {"action_b", e.action_b},
                       {"action_e", e.action_e}});
    jcases.push_back({{"key", c.key},
                      {"start", c.start},
                      {"agreement", c.agreement},
                      {"path", jpath},
                      {"verdict", {{"raw", c.verdict.raw}, {"oriented", c.verdict.oriented}}}});
  }
  Json jphrases = Json::array();
  for (const auto& ph : phrases)
    jphrases.push_back({{"more", ph.more}, {"less", ph.less}, {"unknown", ph.unknown}});
  std::vector<bool> higher;
  for (char h : higher_is_better) higher.push_back(h != 0);
  return {{"cases", jcases},
          {"outcomes", outcome_names},
          {"phrases", jphrases},
          {"higher_is_better", higher}};
}

Explanation Explanation::from_json(const Json& j) {
  Explanation out;
  out.outcome_names = j.at("outcomes").get<std::vector<std::string>>();
  for (const auto& jp : j.at("phrases"))
    out.phrases.push_back({jp.at("more").get<std::string>(), jp.at("less").get<std::string>(),
                           jp.at("unknown").get<std::string>()});
  for (bool h : j.at("higher_is_better").get<std::vector<bool>>())
    out.higher_is_better.push_back(h ? 1 : 0);
  for (const auto& jc : j.at("cases")) {
    ExplanationCase c;
    c.key = jc.at("key").get<int>();
    c.start = jc.at("start").get<std::string>();
    c.agreement = jc.at("agreement").get<bool>();
    for (const auto& je : jc.at("path")) {
      PathEntry e;
      e.label = je.at("label").get<int>();
      e.clause = je.at("clause").get<int>();
      e.desc = je.at("desc").get<std::string>();
      e.action_b = je.at("action_b").get<int>();
      e.action_e = je.at("action_e").get<int>();
      c.path.push_back(e);
    }
    c.verdict.raw = jc.at("verdict").at("raw").get<std::vector<int>>();
    c.verdict.oriented = jc.at("verdict").at("oriented").get<std::vector<int>>();
    out.cases.push_back(c);
  }
  return out;
}

}  // namespace cpk
