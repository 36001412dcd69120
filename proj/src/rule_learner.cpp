// rule_learner.cpp — greedy set-cover DNF induction and the ordered
// one-vs-rest multi-class wrapper.
#include "cpk/rule_learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cpk {

namespace {

constexpr double kSnapTol = 1e-9;

void check_rows(const std::vector<FeatureVec>& rows, const FeatureSpace& space) {
  for (const auto& r : rows)
    require(int(r.size()) == space.dim(), ErrorCode::DimensionMismatch,
            "feature vector dimension does not match feature space");
  for (const auto& f : space.features)
    require(f.one_hot || !f.thresholds.empty(), ErrorCode::EmptyThresholds,
            "continuous feature '" + f.name + "' has no thresholds");
}

}  // namespace

// ============================================================================
// Feature spaces
// ============================================================================

FeatureSpace FeatureSpace::nav_grid(double grid) {
  require(grid > 0.0 && grid < 1.0, ErrorCode::InvalidConfig, "grid step must lie in (0,1)");
  std::vector<double> ts;
  for (int i = 1; i * grid < 1.0 - 1e-9; ++i) ts.push_back(i * grid);
  FeatureSpace sp;
  sp.features.push_back({"x", false, ts, 0.0, 1.0});
  sp.features.push_back({"y", false, ts, 0.0, 1.0});
  return sp;
}

FeatureSpace FeatureSpace::one_hot(int n) {
  require(n >= 1, ErrorCode::InvalidConfig, "one-hot space needs at least one state");
  FeatureSpace sp;
  for (int i = 0; i < n; ++i)
    sp.features.push_back({"s_" + std::to_string(i), true, {}, 0.0, 1.0});
  return sp;
}

// ============================================================================
// binarize
// ============================================================================

BinaryMatrix binarize(const std::vector<FeatureVec>& rows, const FeatureSpace& space) {
  check_rows(rows, space);
  BinaryMatrix out;
  for (int f = 0; f < space.dim(); ++f) {
    const auto& feat = space.features[std::size_t(f)];
    if (feat.one_hot) {
      out.columns.push_back({f, true, 0.5});
    } else {
      for (double t : feat.thresholds) out.columns.push_back({f, false, t});
    }
  }
  out.rows.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<std::uint8_t> br;
    br.reserve(out.columns.size());
    for (const auto& c : out.columns)
      br.push_back(r[std::size_t(c.feature)] >= c.threshold ? 1 : 0);
    out.rows.push_back(std::move(br));
  }
  return out;
}

// ============================================================================
// Binary DNF learner
// ============================================================================

namespace {

std::vector<Predicate> candidate_literals(const FeatureSpace& space) {
  std::vector<Predicate> cands;
  for (int f = 0; f < space.dim(); ++f) {
    const auto& feat = space.features[std::size_t(f)];
    if (feat.one_hot) {
      cands.push_back({f, Predicate::GE, 0.5});
    } else {
      for (double t : feat.thresholds) {
        cands.push_back({f, Predicate::GE, t});
        cands.push_back({f, Predicate::LT, t});
      }
    }
  }
  return cands;
}

// Snap the covered-positive bounding box outward to the threshold grid and
// store it on the clause, so descriptions can render tight intervals.
void attach_support(Clause& clause, const std::vector<FeatureVec>& rows,
                    const std::vector<char>& labels, const FeatureSpace& space) {
  int d = space.dim();
  std::vector<double> lo(std::size_t(d), std::numeric_limits<double>::infinity());
  std::vector<double> hi(std::size_t(d), -std::numeric_limits<double>::infinity());
  bool any = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!labels[i] || !clause.matches(rows[i])) continue;
    any = true;
    for (int f = 0; f < d; ++f) {
      lo[std::size_t(f)] = std::min(lo[std::size_t(f)], rows[i][std::size_t(f)]);
      hi[std::size_t(f)] = std::max(hi[std::size_t(f)], rows[i][std::size_t(f)]);
    }
  }
  if (!any) return;
  clause.sup_lo.assign(std::size_t(d), 0.0);
  clause.sup_hi.assign(std::size_t(d), 1.0);
  for (int f = 0; f < d; ++f) {
    const auto& feat = space.features[std::size_t(f)];
    if (feat.one_hot) {
      clause.sup_lo[std::size_t(f)] = feat.range_lo;
      clause.sup_hi[std::size_t(f)] = feat.range_hi;
      continue;
    }
    double slo = feat.range_lo;
    for (double t : feat.thresholds)
      if (t <= lo[std::size_t(f)] + kSnapTol) slo = std::max(slo, t);
    double shi = feat.range_hi;
    for (auto it = feat.thresholds.rbegin(); it != feat.thresholds.rend(); ++it)
      if (*it > hi[std::size_t(f)] + kSnapTol) shi = std::min(shi, *it);
    clause.sup_lo[std::size_t(f)] = slo;
    clause.sup_hi[std::size_t(f)] = shi;
  }
  clause.has_support = true;
}

}  // namespace

DnfRuleSet learn_binary_dnf(const std::vector<FeatureVec>& rows,
                            const std::vector<char>& labels, const FeatureSpace& space,
                            const RuleBudget& budget) {
  check_rows(rows, space);
  require(rows.size() == labels.size(), ErrorCode::DimensionMismatch,
          "labels must align with rows");
  require(!rows.empty(), ErrorCode::EmptyBatch, "no training rows");
  require(budget.max_clauses >= 1 && budget.max_clause_len >= 1, ErrorCode::InvalidConfig,
          "rule budget must be positive");

  std::size_t n = rows.size();
  bool any_pos = false, any_neg = false;
  for (std::size_t i = 0; i < n; ++i) (labels[i] ? any_pos : any_neg) = true;
  require(any_pos && any_neg, ErrorCode::SingleClass, "training labels are constant");

  const auto cands = candidate_literals(space);
  std::vector<char> covered(n, 0);  // positives already covered by accepted clauses
  DnfRuleSet rs;

  auto uncovered_left = [&] {
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] && !covered[i]) return true;
    return false;
  };

  while (uncovered_left() && int(rs.clauses.size()) < budget.max_clauses) {
    Clause clause;
    std::vector<char> match(n, 1);

    while (true) {
      long neg_now = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (match[i] && !labels[i]) ++neg_now;
      if (neg_now == 0 && !clause.preds.empty()) break;
      if (int(clause.preds.size()) >= budget.max_clause_len) break;

      // Pick the literal with the best precision on (uncovered positives vs
      // negatives) inside the current clause; ties prefer more positives,
      // then the earliest literal in enumeration order.
      int best = -1;
      long best_p = 0, best_n = 0;
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const auto& pr = cands[c];
        bool dup = false;
        for (const auto& q : clause.preds)
          dup = dup || (q.feature == pr.feature && q.cmp == pr.cmp &&
                        q.threshold == pr.threshold);
        if (dup) continue;
        long p = 0, ng = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!match[i] || !pr.matches(rows[i])) continue;
          if (labels[i]) {
            if (!covered[i]) ++p;
          } else {
            ++ng;
          }
        }
        if (p == 0) continue;
        // precision comparison p/(p+ng) via cross-multiplication (exact)
        bool better =
            best < 0 || p * (best_p + best_n) > best_p * (p + ng) ||
            (p * (best_p + best_n) == best_p * (p + ng) && p > best_p);
        if (better) {
          best = int(c);
          best_p = p;
          best_n = ng;
        }
      }
      if (best < 0) break;  // nothing covers an uncovered positive anymore
      clause.preds.push_back(cands[std::size_t(best)]);
      for (std::size_t i = 0; i < n; ++i)
        if (match[i] && !cands[std::size_t(best)].matches(rows[i])) match[i] = 0;
    }

    if (clause.preds.empty()) {
      rs.imperfect = true;  // no literal makes progress on the uncovered set
      break;
    }

    // Backward prune: drop literals whose removal keeps the clause pure.
    long neg_final = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!labels[i] && clause.matches(rows[i])) ++neg_final;
    if (neg_final == 0) {
      bool removed = true;
      while (removed && clause.preds.size() > 1) {
        removed = false;
        for (std::size_t k = 0; k < clause.preds.size(); ++k) {
          Clause trial = clause;
          trial.preds.erase(trial.preds.begin() + long(k));
          long ng = 0;
          for (std::size_t i = 0; i < n; ++i)
            if (!labels[i] && trial.matches(rows[i])) ++ng;
          if (ng == 0) {
            clause = trial;
            removed = true;
            break;
          }
        }
      }
    } else {
      rs.imperfect = true;
    }

    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] && clause.matches(rows[i])) covered[i] = 1;
    rs.clauses.push_back(std::move(clause));
  }

  if (uncovered_left()) rs.imperfect = true;

  // Drop clauses the rest of the cover makes redundant: greedy growth can
  // emit a high-precision fragment first and a broader clause that engulfs
  // it later, and the fragment would only split the described region. Scan
  // in order, drop the first clause whose covered positives are all covered
  // elsewhere, repeat to a fixed point.
  if (rs.clauses.size() > 1) {
    std::vector<std::vector<char>> covers;
    for (const auto& c : rs.clauses) {
      std::vector<char> cv(n, 0);
      for (std::size_t i = 0; i < n; ++i) cv[i] = labels[i] && c.matches(rows[i]) ? 1 : 0;
      covers.push_back(std::move(cv));
    }
    bool dropped = true;
    while (dropped && covers.size() > 1) {
      dropped = false;
      for (std::size_t k = 0; k < covers.size(); ++k) {
        bool redundant = true;
        for (std::size_t i = 0; i < n && redundant; ++i) {
          if (!covers[k][i]) continue;
          bool elsewhere = false;
          for (std::size_t j = 0; j < covers.size() && !elsewhere; ++j)
            elsewhere = j != k && covers[j][i];
          redundant = elsewhere;
        }
        if (redundant) {
          rs.clauses.erase(rs.clauses.begin() + long(k));
          covers.erase(covers.begin() + long(k));
          dropped = true;
          break;
        }
      }
    }
  }

  for (auto& c : rs.clauses) attach_support(c, rows, labels, space);
  return rs;
}

// ============================================================================
// Multi-class wrapper
// ============================================================================

DnfRuleClassifier learn_multiclass(const std::vector<FeatureVec>& rows,
                                   const std::vector<int>& labels, const FeatureSpace& space,
                                   const RuleBudget& budget) {
  check_rows(rows, space);
  require(rows.size() == labels.size(), ErrorCode::DimensionMismatch,
          "labels must align with rows");
  require(!rows.empty(), ErrorCode::EmptyBatch, "no training rows");

  std::map<int, long> counts;
  for (int l : labels) ++counts[l];
  require(counts.size() >= 2, ErrorCode::SingleClass, "need at least two classes");

  // Ascending class size; ties by ascending label id (std::map iterates ids
  // in order, and stable_sort keeps that order among equal counts).
  std::vector<int> order;
  for (const auto& [l, c] : counts) order.push_back(l);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a] < counts[b]; });

  DnfRuleClassifier clf;
  clf.space = space;
  std::vector<std::size_t> remaining(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) remaining[i] = i;

  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    int cls = order[k];
    std::vector<FeatureVec> sub;
    std::vector<char> y;
    sub.reserve(remaining.size());
    y.reserve(remaining.size());
    for (std::size_t i : remaining) {
      sub.push_back(rows[i]);
      y.push_back(labels[i] == cls ? 1 : 0);
    }
    DnfRuleSet rs = learn_binary_dnf(sub, y, space, budget);
    rs.predicted_label = cls;
    clf.ordered_rules.push_back(std::move(rs));
    std::vector<std::size_t> next;
    for (std::size_t i : remaining)
      if (labels[i] != cls) next.push_back(i);
    remaining = std::move(next);
  }
  clf.default_label = order.back();
  return clf;
}

// ============================================================================
// Descriptions
// ============================================================================

std::string describe_clause(const Clause& clause, const FeatureSpace& space) {
  // One-hot literals name the state directly.
  std::vector<std::string> names;
  for (const auto& p : clause.preds)
    if (space.features[std::size_t(p.feature)].one_hot && p.cmp == Predicate::GE)
      names.push_back(space.features[std::size_t(p.feature)].name);
  if (!names.empty()) {
    std::string out = names[0];
    for (std::size_t i = 1; i < names.size(); ++i) out += " & " + names[i];
    return out;
  }

  std::string out;
  for (int f = 0; f < space.dim(); ++f) {
    const auto& feat = space.features[std::size_t(f)];
    if (feat.one_hot) continue;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool constrained = false;
    for (const auto& p : clause.preds) {
      if (p.feature != f) continue;
      constrained = true;
      if (p.cmp == Predicate::GE)
        lo = std::max(lo, p.threshold);
      else
        hi = std::min(hi, p.threshold);
    }
    if (clause.has_support) {
      double slo = clause.sup_lo[std::size_t(f)];
      double shi = clause.sup_hi[std::size_t(f)];
      if (!constrained && slo <= feat.range_lo && shi >= feat.range_hi)
        continue;  // feature carries no information
      lo = std::max(lo, slo);
      hi = std::min(hi, shi);
    } else if (!constrained) {
      continue;
    }
    bool has_lo = std::isfinite(lo);
    bool has_hi = std::isfinite(hi);
    std::string part;
    if (has_lo && has_hi)
      part = fmt_short(lo) + "≤" + feat.name + "<" + fmt_short(hi);
    else if (has_lo)
      part = feat.name + "≥" + fmt_short(lo);
    else
      part = feat.name + "<" + fmt_short(hi);
    if (!out.empty()) out += ", ";
    out += part;
  }
  return out.empty() ? "always" : out;
}

std::string DnfRuleClassifier::describe(int label) const {
  for (const auto& rs : ordered_rules) {
    if (rs.predicted_label != label) continue;
    std::string out;
    for (const auto& c : rs.clauses) {
      if (!out.empty()) out += " or ";
      out += "region " + describe_clause(c, space);
    }
    return out;
  }
  require(label == default_label, ErrorCode::UnknownLabel,
          "label " + std::to_string(label) + " has no rule set");
  return "otherwise";
}

// ============================================================================
// Serialization
// ============================================================================

Json DnfRuleClassifier::to_json() const {
  Json rules = Json::array();
  for (const auto& rs : ordered_rules) {
    Json clauses = Json::array();
    for (const auto& c : rs.clauses) {
      Json preds = Json::array();
      for (const auto& p : c.preds)
        preds.push_back({{"feature", p.feature},
                         {"cmp", p.cmp == Predicate::GE ? "ge" : "lt"},
                         {"threshold", p.threshold}});
      Json jc = {{"preds", preds}};
      if (c.has_support) jc["support"] = {{"lo", c.sup_lo}, {"hi", c.sup_hi}};
      clauses.push_back(jc);
    }
    rules.push_back(
        {{"label", rs.predicted_label}, {"imperfect", rs.imperfect}, {"clauses", clauses}});
  }
  Json feats = Json::array();
  for (const auto& f : space.features)
    feats.push_back({{"name", f.name},
                     {"one_hot", f.one_hot},
                     {"thresholds", f.thresholds},
                     {"range", {f.range_lo, f.range_hi}}});
  return {{"default_label", default_label}, {"rules", rules}, {"space", {{"features", feats}}}};
}

DnfRuleClassifier DnfRuleClassifier::from_json(const Json& j) {
  try {
    DnfRuleClassifier clf;
    clf.default_label = j.at("default_label").get<int>();
    for (const auto& jf : j.at("space").at("features")) {
      FeatureSpace::Feature f;
      f.name = jf.at("name").get<std::string>();
      f.one_hot = jf.at("one_hot").get<bool>();
      f.thresholds = jf.at("thresholds").get<std::vector<double>>();
      f.range_lo = jf.at("range")[0].get<double>();
      f.range_hi = jf.at("range")[1].get<double>();
      clf.space.features.push_back(std::move(f));
    }
    for (const auto& jr : j.at("rules")) {
      DnfRuleSet rs;
      rs.predicted_label = jr.at("label").get<int>();
      rs.imperfect = jr.at("imperfect").get<bool>();
      for (const auto& jc : jr.at("clauses")) {
        Clause c;
        for (const auto& jp : jc.at("preds")) {
          Predicate p;
          p.feature = jp.at("feature").get<int>();
          p.cmp = jp.at("cmp").get<std::string>() == "ge" ? Predicate::GE : Predicate::LT;
          p.threshold = jp.at("threshold").get<double>();
          c.preds.push_back(p);
        }
        if (jc.contains("support")) {
          c.has_support = true;
          c.sup_lo = jc.at("support").at("lo").get<std::vector<double>>();
          c.sup_hi = jc.at("support").at("hi").get<std::vector<double>>();
        }
        rs.clauses.push_back(std::move(c));
      }
      clf.ordered_rules.push_back(std::move(rs));
    }
    return clf;
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("bad classifier JSON: ") + e.what());
  }
}

}  // namespace cpk
