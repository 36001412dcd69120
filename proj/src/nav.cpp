// nav.cpp — navigation action names and rule-policy serialization.

#include "cpk/nav.hpp"

namespace cpk {

const char* nav_action_name(int a) {
  switch (a) {
    case kEast: return "E";
    case kNorth: return "N";
    case kSouth: return "S";
  }
  return "?";
}

const char* nav_action_word(int a) {
  switch (a) {
    case kEast: return "east";
    case kNorth: return "north";
    case kSouth: return "south";
  }
  return "?";
}

IntervalCond cond_ge(int feature, double lo) {
  IntervalCond c;
  c.feature = feature;
  c.has_lo = true;
  c.lo = lo;
  return c;
}

IntervalCond cond_lt(int feature, double hi) {
  IntervalCond c;
  c.feature = feature;
  c.has_hi = true;
  c.hi = hi;
  return c;
}

IntervalCond cond_range(int feature, double lo, double hi) {
  IntervalCond c;
  c.feature = feature;
  c.has_lo = true;
  c.lo = lo;
  c.has_hi = true;
  c.hi = hi;
  return c;
}

Json RulePolicy::to_json() const {
  Json j;
  j["kind"] = "rules";
  Json rules_j = Json::array();
  for (const auto& r : rules) {
    Json rj;
    Json conds_j = Json::array();
    for (const auto& c : r.conds) {
      Json cj;
      cj["feature"] = c.feature == 0 ? "x" : "y";
      if (c.has_lo) cj["lo"] = c.lo;
      if (c.has_hi) cj["hi"] = c.hi;
      conds_j.push_back(cj);
    }
    rj["conds"] = conds_j;
    rj["action"] = nav_action_name(r.action);
    rules_j.push_back(rj);
  }
  j["rules"] = rules_j;
  j["default"] = nav_action_name(default_action);
  return j;
}

namespace {

int parse_nav_action(const std::string& s) {
  if (s == "E") return kEast;
  if (s == "N") return kNorth;
  if (s == "S") return kSouth;
  fail(ErrorCode::InvalidConfig, "unknown nav action '" + s + "'");
}

}  // namespace

RulePolicy RulePolicy::from_json(const Json& j) {
  RulePolicy p;
  try {
    require(j.at("kind").get<std::string>() == "rules", ErrorCode::InvalidConfig,
            "policy JSON kind is not 'rules'");
    for (const auto& rj : j.at("rules")) {
      PolicyRule r;
      for (const auto& cj : rj.at("conds")) {
        IntervalCond c;
        std::string f = cj.at("feature").get<std::string>();
        require(f == "x" || f == "y", ErrorCode::InvalidConfig, "unknown feature '" + f + "'");
        c.feature = f == "x" ? 0 : 1;
        if (cj.contains("lo")) {
          c.has_lo = true;
          c.lo = cj.at("lo").get<double>();
        }
        if (cj.contains("hi")) {
          c.has_hi = true;
          c.hi = cj.at("hi").get<double>();
        }
        r.conds.push_back(c);
      }
      r.action = parse_nav_action(rj.at("action").get<std::string>());
      p.rules.push_back(r);
    }
    p.default_action = parse_nav_action(j.at("default").get<std::string>());
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("bad rule-policy JSON: ") + e.what());
  }
  return p;
}

}  // namespace cpk
