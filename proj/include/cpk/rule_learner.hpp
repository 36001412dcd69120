// rule_learner.hpp — interpretable multi-class rule classifier over threshold
// predicates: greedy set-cover DNF induction wrapped in an ordered
// one-vs-rest scheme (smallest class first, largest class as default).
//
// The binary learner is deliberately simple: the target regions in this
// code base are axis-aligned boxes on a fixed threshold grid, which greedy
// clause growth recovers exactly. The interface keeps the learner pluggable.
#pragma once

#include <string>
#include <vector>

#include "cpk/common.hpp"
#include "cpk/mdp.hpp"
#include "cpk/nav.hpp"

namespace cpk {

using FeatureVec = std::vector<double>;

// ============================================================================
// Feature spaces
// ============================================================================

/// Describes the predicate vocabulary per feature: either a continuous
/// feature with a threshold grid, or a 0/1 one-hot indicator (positive
/// literals only).
struct FeatureSpace {
  struct Feature {
    std::string name;
    bool one_hot = false;
    std::vector<double> thresholds;  // sorted ascending; unused for one-hot
    double range_lo = 0.0;
    double range_hi = 1.0;
  };
  std::vector<Feature> features;

  int dim() const { return int(features.size()); }

  /// x/y on the unit square with thresholds at multiples of `grid` (default 0.05).
  static FeatureSpace nav_grid(double grid = 0.05);
  /// One-hot space over n discrete states named "s_0", "s_1", ...
  static FeatureSpace one_hot(int n);
};

inline FeatureVec nav_features(const Vec2& p) { return {p.x, p.y}; }

inline FeatureVec one_hot_features(int s, int n) {
  FeatureVec v(std::size_t(n), 0.0);
  v[std::size_t(s)] = 1.0;
  return v;
}

// ============================================================================
// Predicates, clauses, rule sets
// ============================================================================

struct Predicate {
  int feature = 0;
  enum Cmp { GE, LT } cmp = GE;
  double threshold = 0.0;

  bool matches(const FeatureVec& fv) const {
    double v = fv[std::size_t(feature)];
    return cmp == GE ? v >= threshold : v < threshold;
  }
};

/// Conjunction of predicates. Trained clauses additionally carry a support
/// bounding box (per-feature [lo, hi) over covered positives, snapped outward
/// to the threshold grid) which describe() uses to render tight intervals.
struct Clause {
  std::vector<Predicate> preds;
  bool has_support = false;
  std::vector<double> sup_lo;
  std::vector<double> sup_hi;

  bool matches(const FeatureVec& fv) const {
    for (const auto& p : preds)
      if (!p.matches(fv)) return false;
    return true;
  }
};

struct DnfRuleSet {
  std::vector<Clause> clauses;
  int predicted_label = 0;
  // Set when the clause/length budget was exhausted before reaching zero
  // training error; the rule set is still usable.
  bool imperfect = false;

  bool matches(const FeatureVec& fv) const {
    for (const auto& c : clauses)
      if (c.matches(fv)) return true;
    return false;
  }
};

struct RuleBudget {
  int max_clauses = 8;
  int max_clause_len = 6;
};

// ============================================================================
// Classifier
// ============================================================================

struct DnfRuleClassifier {
  std::vector<DnfRuleSet> ordered_rules;  // evaluated first-match-wins
  int default_label = 0;
  FeatureSpace space;

  struct Match {
    int label = 0;
    int rule_idx = -1;    // index into ordered_rules; -1 for the default
    int clause_idx = -1;  // matching clause within the rule set; -1 for default
  };

  int classify(const FeatureVec& fv) const { return classify_with_clause(fv).label; }

  Match classify_with_clause(const FeatureVec& fv) const {
    for (std::size_t r = 0; r < ordered_rules.size(); ++r) {
      const auto& rs = ordered_rules[r];
      for (std::size_t c = 0; c < rs.clauses.size(); ++c)
        if (rs.clauses[c].matches(fv)) return {rs.predicted_label, int(r), int(c)};
    }
    return {default_label, -1, -1};
  }

  /// Human-readable region description for a label: clauses joined by " or ".
  /// The default label (no rule set) renders as "otherwise".
  std::string describe(int label) const;

  Json to_json() const;
  static DnfRuleClassifier from_json(const Json& j);
};

// ============================================================================
// Operations
// ============================================================================

/// Binary indicator matrix: one column per (continuous feature, threshold)
/// pair (value >= threshold) and one column per one-hot feature.
struct BinaryMatrix {
  struct Column {
    int feature = 0;
    bool one_hot = false;
    double threshold = 0.0;
  };
  std::vector<Column> columns;
  std::vector<std::vector<std::uint8_t>> rows;
};

BinaryMatrix binarize(const std::vector<FeatureVec>& rows, const FeatureSpace& space);

/// Greedy set-cover DNF induction for a binary concept. On separable data
/// within the budget the training error is zero; otherwise the rule set is
/// flagged imperfect. Deterministic given input order.
DnfRuleSet learn_binary_dnf(const std::vector<FeatureVec>& rows,
                            const std::vector<char>& labels, const FeatureSpace& space,
                            const RuleBudget& budget = {});

/// Ordered one-vs-rest wrapper: classes ascending by training-set size (ties
/// by label id); the largest class becomes the default.
DnfRuleClassifier learn_multiclass(const std::vector<FeatureVec>& rows,
                                   const std::vector<int>& labels, const FeatureSpace& space,
                                   const RuleBudget& budget = {});

/// Renders one clause as interval text, e.g. "0.1≤x<0.2, 0.3≤y<0.4" or "s_1".
std::string describe_clause(const Clause& clause, const FeatureSpace& space);

}  // namespace cpk
