#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pdtmc/engine/numeric.hpp"
#include "pdtmc/engine/symbolic.hpp"
#include "pdtmc/ratfunc/compiled.hpp"

namespace pdtmc {

enum class Direction { MustNotExceed, MustMeet, Report };

inline std::string to_string(Direction d) {
  switch (d) {
    case Direction::MustNotExceed:
      return "mustNotExceed";
    case Direction::MustMeet:
      return "mustMeet";
    case Direction::Report:
      return "report";
  }
  return "report";
}

inline Direction direction_from_string(std::string_view s) {
  if (s == "mustNotExceed") return Direction::MustNotExceed;
  if (s == "mustMeet") return Direction::MustMeet;
  if (s == "report") return Direction::Report;
  throw Error("unknown requirement direction '" + std::string(s) + "'");
}

/// One monitored requirement: value = scalar * P[query] compared against
/// `threshold`. Step-bounded queries are evaluated numerically at runtime.
struct RequirementSpec {
  std::string id;
  PctlQuery query;  // kind is ignored; the probability is always computed
  std::optional<BigRational> threshold;
  Direction direction = Direction::Report;
  std::optional<std::string> scalar;  // constant name, e.g. C_S2

  bool numeric_only() const noexcept { return query.is_bounded(); }
};

struct RequirementOptions {
  BigRational max_c2{3};
  std::optional<BigRational> h4_lower_bound;  // e.g. 5
  std::optional<std::uint64_t> h5_steps;      // defaults to MAX_TIME_TRAJECTORY
};

/// The five snag-handling requirements of the dressing model.
inline std::vector<RequirementSpec> dressing_requirements(const Pdtmc& p, const RequirementOptions& opts = {}) {
  auto q = [](std::string_view text) { return lang::parse_property(text); };
  std::vector<RequirementSpec> out;
  out.push_back({"H1", q("P<=0.1 [ F s=8 ]"), BigRational(1, 10), Direction::MustNotExceed, std::nullopt});
  out.push_back({"H2", q("P>=0.9 [ F s=3 ]"), BigRational(9, 10), Direction::MustMeet, std::nullopt});
  out.push_back({"H3", q("P=? [ F s=2 ]"), opts.max_c2, Direction::MustNotExceed, "C_S2"});
  out.push_back({"H4", q("P=? [ F s=7 ]"), opts.h4_lower_bound,
                 opts.h4_lower_bound ? Direction::MustMeet : Direction::Report, "R_S7"});
  std::uint64_t steps = 0;
  if (opts.h5_steps) {
    steps = *opts.h5_steps;
  } else if (auto it = p.fixed.find("MAX_TIME_TRAJECTORY"); it != p.fixed.end()) {
    steps = it->second.get_num().get_ui();
  } else {
    throw Error("H5 needs a step bound: bind MAX_TIME_TRAJECTORY or set it explicitly");
  }
  PctlQuery h5 = q("P>=0.95 [ F s=3 ]");
  h5.step_bound = steps;
  out.push_back({"H5", h5, BigRational(19, 20), Direction::MustMeet, std::nullopt});
  return out;
}

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // Separator so that concatenations of different splits hash differently.
  h ^= 0xff;
  h *= 0x100000001b3ULL;
  return h;
}

}  // namespace detail

/// Identifies the (model text, fixed bindings, requirement set) a cache was
/// built from.
inline std::string fingerprint(std::string_view model_text, const Bindings& fixed,
                               const std::vector<RequirementSpec>& specs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = detail::fnv1a(h, model_text);
  for (const auto& [name, value] : fixed) {
    h = detail::fnv1a(h, name);
    h = detail::fnv1a(h, to_string(value));
  }
  for (const auto& s : specs) {
    h = detail::fnv1a(h, s.id);
    h = detail::fnv1a(h, to_string(s.query));
    h = detail::fnv1a(h, s.threshold ? to_string(*s.threshold) : "-");
    h = detail::fnv1a(h, to_string(s.direction));
    h = detail::fnv1a(h, s.scalar.value_or("-"));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct CachedRequirement {
  RequirementSpec spec;
  std::optional<SymbolicResult> symbolic;  // absent for step-bounded queries
  CompiledFunction compiled;
  StateSet target;
};

/// Precomputed expressions plus everything evaluate() needs at runtime.
struct MonitorCache {
  const Pdtmc* chain = nullptr;
  std::string fingerprint;
  std::vector<CachedRequirement> requirements;
  std::vector<CompiledFunction> transitions;  // aligned with chain->transitions

  const CachedRequirement* find(std::string_view id) const {
    for (const auto& r : requirements)
      if (r.spec.id == id) return &r;
    return nullptr;
  }
};

namespace detail {

inline void finish_cache(MonitorCache& cache) {
  cache.transitions.clear();
  cache.transitions.reserve(cache.chain->transitions.size());
  for (const auto& t : cache.chain->transitions) cache.transitions.emplace_back(t.probability);
}

inline void check_ids(const std::vector<RequirementSpec>& specs) {
  std::set<std::string> seen;
  for (const auto& s : specs)
    if (!seen.insert(s.id).second) throw Error("requirement '" + s.id + "' configured twice");
}

}  // namespace detail

/// Derives one symbolic expression per unbounded requirement. The chain must
/// outlive the cache.
inline MonitorCache precompute(const Pdtmc& p, const std::vector<RequirementSpec>& specs,
                               std::string_view model_text = {}, const EliminationOptions& opts = {}) {
  detail::check_ids(specs);
  MonitorCache cache;
  cache.chain = &p;
  cache.fingerprint = fingerprint(model_text, p.fixed, specs);
  for (const auto& s : specs) {
    CachedRequirement r;
    r.spec = s;
    r.target = states_satisfying(p, s.query.target);
    bool any = false;
    for (bool b : r.target) any = any || b;
    if (!any) throw Error("requirement " + s.id + ": no state satisfies " + to_string(s.query.target));
    if (!s.numeric_only()) {
      r.symbolic = symbolic_reach(p, r.target, opts);
      r.compiled = CompiledFunction(r.symbolic->expr);
    }
    cache.requirements.push_back(std::move(r));
  }
  detail::finish_cache(cache);
  return cache;
}

inline nlohmann::json to_json(const MonitorCache& cache) {
  nlohmann::json reqs = nlohmann::json::array();
  for (const auto& r : cache.requirements) {
    nlohmann::json j{{"id", r.spec.id},
                     {"query", to_string(r.spec.query)},
                     {"direction", to_string(r.spec.direction)}};
    j["threshold"] = r.spec.threshold ? nlohmann::json(to_string(*r.spec.threshold)) : nlohmann::json(nullptr);
    j["scalar"] = r.spec.scalar ? nlohmann::json(*r.spec.scalar) : nlohmann::json(nullptr);
    j["expression"] = r.symbolic ? nlohmann::json(r.symbolic->expression()) : nlohmann::json(nullptr);
    reqs.push_back(std::move(j));
  }
  return {{"fingerprint", cache.fingerprint}, {"params", cache.chain->params.names()}, {"requirements", reqs}};
}

/// Restores a cache exported by to_json. Rejects it unless its fingerprint
/// equals `expected`.
inline MonitorCache load_cache(const nlohmann::json& j, const Pdtmc& p, const std::string& expected) {
  const auto stored = j.at("fingerprint").get<std::string>();
  if (stored != expected) throw StaleCache("monitor cache " + stored + " does not match model fingerprint " + expected);
  MonitorCache cache;
  cache.chain = &p;
  cache.fingerprint = stored;
  for (const auto& jr : j.at("requirements")) {
    CachedRequirement r;
    r.spec.id = jr.at("id").get<std::string>();
    r.spec.query = lang::parse_property(jr.at("query").get<std::string>());
    r.spec.direction = direction_from_string(jr.at("direction").get<std::string>());
    if (!jr.at("threshold").is_null()) r.spec.threshold = *parse_rational(jr.at("threshold").get<std::string>());
    if (!jr.at("scalar").is_null()) r.spec.scalar = jr.at("scalar").get<std::string>();
    r.target = states_satisfying(p, r.spec.query.target);
    if (!jr.at("expression").is_null()) {
      SymbolicResult s;
      s.query = r.spec.query;
      s.params = p.params;
      s.fixed = p.fixed;
      s.expr = parse_rational_function(jr.at("expression").get<std::string>(), s.params);
      if (s.params.size() != p.params.size())
        throw StaleCache("cached expression for " + r.spec.id + " mentions unknown parameters");
      s.free_params = s.expr.parameters();
      r.compiled = CompiledFunction(s.expr);
      r.symbolic = std::move(s);
    }
    cache.requirements.push_back(std::move(r));
  }
  detail::finish_cache(cache);
  return cache;
}

struct RequirementResult {
  std::string id;
  bool evaluable = true;
  double probability = 0.0;  // the reachability probability
  double value = 0.0;        // scalar * probability
  std::optional<bool> satisfied;
  std::optional<double> margin;  // signed distance to the threshold
};

struct MonitorReport {
  double timestamp = 0.0;
  std::map<std::string, double> valuation;
  std::vector<RequirementResult> results;
  std::vector<std::string> warnings;

  const RequirementResult* find(std::string_view id) const {
    for (const auto& r : results)
      if (r.id == id) return &r;
    return nullptr;
  }
  bool all_satisfied() const {
    for (const auto& r : results)
      if (!r.evaluable || (r.satisfied && !*r.satisfied)) return false;
    return true;
  }
  bool any_unevaluable() const {
    for (const auto& r : results)
      if (!r.evaluable) return true;
    return false;
  }
};

struct MonitorOptions {
  double timestamp = 0.0;
  /// |denominator| below this is reported as close to a pole.
  double pole_tolerance = 1e-9;
  /// Slack for double-rounded probabilities just outside [0, 1].
  double probability_slack = 1e-12;
};

namespace detail {

inline double scalar_value(const Pdtmc& p, const RequirementSpec& s, const std::vector<double>& point) {
  if (!s.scalar) return 1.0;
  if (auto it = p.fixed.find(*s.scalar); it != p.fixed.end()) return to_double(it->second);
  if (auto id = p.params.find(*s.scalar)) return point[id->index];
  throw UnboundParameter(*s.scalar);
}

inline RequirementResult judge(const RequirementSpec& s, double probability, double scalar) {
  RequirementResult r;
  r.id = s.id;
  r.probability = probability;
  r.value = scalar * probability;
  if (s.threshold && s.direction != Direction::Report) {
    const double t = to_double(*s.threshold);
    r.margin = s.direction == Direction::MustNotExceed ? t - r.value : r.value - t;
    r.satisfied = *r.margin >= 0.0;
  }
  return r;
}

}  // namespace detail

/// Evaluates every cached requirement at `point` (indexed by parameter id).
/// Only expression substitution and one bounded numeric pass per
/// step-bounded requirement are performed.
inline MonitorReport evaluate(const MonitorCache& cache, const std::vector<double>& point,
                              const MonitorOptions& opts = {}) {
  const Pdtmc& p = *cache.chain;
  if (point.size() != p.params.size())
    throw Error("valuation has " + std::to_string(point.size()) + " entries for " + std::to_string(p.params.size()) +
                " parameters");
  MonitorReport report;
  report.timestamp = opts.timestamp;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const ParamId id{static_cast<std::uint32_t>(i)};
    report.valuation[p.params.name(id)] = point[i];
    if (auto b = p.bounds.find(id); b != p.bounds.end())
      if (point[i] < to_double(b->second.low) || point[i] > to_double(b->second.high))
        throw InvalidValuation("parameter '" + p.params.name(id) + "' outside its bounds");
  }

  std::optional<InstantiatedChain> chain;
  auto instantiated = [&]() -> const InstantiatedChain& {
    if (!chain) {
      InstantiatedChain ic{&p, std::vector<double>(cache.transitions.size())};
      for (std::size_t i = 0; i < cache.transitions.size(); ++i) {
        double v = cache.transitions[i](point);
        if (!std::isfinite(v) || v < -opts.probability_slack || v > 1.0 + opts.probability_slack)
          throw InvalidValuation("transition " + p.describe(p.transitions[i].source) + " -> " +
                                 p.describe(p.transitions[i].target) + " evaluates to " + std::to_string(v));
        ic.probs[i] = std::clamp(v, 0.0, 1.0);
      }
      chain = std::move(ic);
    }
    return *chain;
  };

  for (const auto& r : cache.requirements) {
    const double scalar = detail::scalar_value(p, r.spec, point);
    if (r.spec.numeric_only()) {
      const double prob = bounded_reach(instantiated(), r.target, *r.spec.query.step_bound);
      report.results.push_back(detail::judge(r.spec, prob, scalar));
      continue;
    }
    const double den = r.compiled.denominator(point);
    if (!std::isfinite(den) || std::abs(den) <= opts.pole_tolerance) {
      RequirementResult bad;
      bad.id = r.spec.id;
      bad.evaluable = false;
      report.warnings.push_back(r.spec.id + ": valuation is at or near a pole of the expression");
      report.results.push_back(bad);
      continue;
    }
    const double prob = r.compiled.numerator(point) / den;
    if (prob < -1e-9 || prob > 1.0 + 1e-9)
      report.warnings.push_back(r.spec.id + ": probability " + std::to_string(prob) + " outside [0, 1]");
    report.results.push_back(detail::judge(r.spec, prob, scalar));
  }
  return report;
}

/// Same as above for an exact valuation; the valuation must bind every
/// parameter and respect its bounds.
inline MonitorReport evaluate(const MonitorCache& cache, const ParamValuation& v, const MonitorOptions& opts = {}) {
  const Pdtmc& p = *cache.chain;
  std::vector<double> point(p.params.size(), 0.0);
  for (std::size_t i = 0; i < point.size(); ++i) {
    const ParamId id{static_cast<std::uint32_t>(i)};
    auto it = v.find(id);
    if (it == v.end()) throw UnboundParameter(p.params.name(id));
    point[i] = to_double(it->second);
  }
  return evaluate(cache, point, opts);
}

enum class Action { Continue, CompliantMode, Abort };

inline std::string to_string(Action a) {
  switch (a) {
    case Action::Continue:
      return "Continue";
    case Action::CompliantMode:
      return "CompliantMode";
    case Action::Abort:
      return "Abort";
  }
  return "Continue";
}

/// Exit status for one-shot evaluation.
inline int exit_code(const MonitorReport& r) {
  if (r.any_unevaluable()) return 4;
  return r.all_satisfied() ? 0 : 3;
}

struct Decision {
  Action action = Action::Continue;
  std::set<std::string> triggered_by;
  std::string rationale;
};

/// The adaptation ladder. Rules that fire:
///   escalation risk (probability of `escalation_requirement`) above
///   `escalation_threshold`, or H1 violated          -> CompliantMode
///   H1 above `abort_factor` times its threshold, or
///   H3 above its threshold when `abort_on_h3`        -> Abort
/// The most severe fired action wins. `h1_rules` switches both H1 rules.
struct DecisionPolicy {
  double escalation_threshold = 0.5;
  std::string escalation_requirement = "H3";
  bool h1_rules = true;
  double abort_factor = 2.0;
  bool abort_on_h3 = true;

  /// Only the escalation-risk rule. In the dressing model every path through
  /// s=2 continues to s=8, so whenever the escalation risk exceeds 0.5 the
  /// default ladder also sees H1 above twice its threshold and aborts.
  static DecisionPolicy escalation_only() {
    DecisionPolicy p;
    p.h1_rules = false;
    p.abort_on_h3 = false;
    return p;
  }
};

inline Decision decide(const MonitorReport& report, const DecisionPolicy& policy = {}) {
  Decision d;
  std::vector<std::string> reasons;
  auto fire = [&](Action a, const std::string& id, const std::string& why) {
    d.action = std::max(d.action, a);
    d.triggered_by.insert(id);
    reasons.push_back(why);
  };
  char buf[160];
  if (const auto* e = report.find(policy.escalation_requirement); e && e->evaluable &&
                                                                  e->probability > policy.escalation_threshold) {
    std::snprintf(buf, sizeof buf, "escalation risk %.4g exceeds %.4g", e->probability, policy.escalation_threshold);
    fire(Action::CompliantMode, "escalation-risk", buf);
  }
  if (const auto* h1 = report.find("H1"); policy.h1_rules && h1 && h1->evaluable && h1->satisfied && !*h1->satisfied) {
    const double threshold = h1->value + *h1->margin;
    std::snprintf(buf, sizeof buf, "H1 value %.4g exceeds %.4g", h1->value, threshold);
    fire(Action::CompliantMode, "H1", buf);
    if (h1->value > policy.abort_factor * threshold) {
      std::snprintf(buf, sizeof buf, "H1 value %.4g exceeds %.4g x %.4g", h1->value, policy.abort_factor, threshold);
      fire(Action::Abort, "H1", buf);
    }
  }
  if (const auto* h3 = report.find("H3"); policy.abort_on_h3 && h3 && h3->evaluable && h3->satisfied && !*h3->satisfied) {
    std::snprintf(buf, sizeof buf, "H3 cost %.4g exceeds MAX_C2 %.4g", h3->value, h3->value + *h3->margin);
    fire(Action::Abort, "H3", buf);
  }
  if (reasons.empty()) {
    d.rationale = "all rules quiet";
  } else {
    for (std::size_t i = 0; i < reasons.size(); ++i) d.rationale += (i ? "; " : "") + reasons[i];
  }
  return d;
}

inline nlohmann::json to_json(const MonitorReport& r) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& x : r.results) {
    nlohmann::json j{{"id", x.id}, {"evaluable", x.evaluable}};
    if (x.evaluable) {
      j["probability"] = x.probability;
      j["value"] = x.value;
    }
    j["satisfied"] = x.satisfied ? nlohmann::json(*x.satisfied) : nlohmann::json(nullptr);
    j["margin"] = x.margin ? nlohmann::json(*x.margin) : nlohmann::json(nullptr);
    results.push_back(std::move(j));
  }
  return {{"time", r.timestamp}, {"valuation", r.valuation}, {"results", results}, {"warnings", r.warnings}};
}

inline nlohmann::json to_json(const Decision& d) {
  return {{"action", to_string(d.action)}, {"triggeredBy", d.triggered_by}, {"rationale", d.rationale}};
}

}  // namespace pdtmc
