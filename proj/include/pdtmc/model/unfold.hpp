#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "pdtmc/model/pdtmc.hpp"

namespace pdtmc {

using Bindings = std::map<std::string, BigRational>;

namespace detail {

struct Value {
  bool is_bool = false;
  bool b = false;
  BigRational n;
};

/// Name resolution for expression evaluation over one state of a model.
struct Scope {
  const Bindings& fixed;
  const ParamSpace* params = nullptr;
  const std::vector<std::string>& variables;
  const std::vector<bool>& variable_is_bool;
  const std::vector<std::int64_t>* state = nullptr;

  std::optional<std::size_t> variable(const std::string& name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i] == name) return i;
    return std::nullopt;
  }
};

inline std::uint32_t small_exponent(const BigRational& e, const Expr& at) {
  if (e.get_den() != 1 || e < 0 || e > 1000000) throw ModelError("exponent must be a non-negative integer: " + to_string(at));
  return static_cast<std::uint32_t>(e.get_num().get_ui());
}

inline Value eval_concrete(const Expr& e, const Scope& scope) {
  switch (e.kind) {
    case Expr::Kind::Number:
      return {false, false, e.number};
    case Expr::Kind::Bool:
      return {true, e.boolean, {}};
    case Expr::Kind::Identifier: {
      if (auto vi = scope.variable(e.name)) {
        if (!scope.state) throw ModelError("variable '" + e.name + "' used outside a state context");
        const auto raw = (*scope.state)[*vi];
        if (scope.variable_is_bool[*vi]) return {true, raw != 0, {}};
        return {false, false, BigRational(static_cast<long>(raw))};
      }
      if (auto it = scope.fixed.find(e.name); it != scope.fixed.end()) return {false, false, it->second};
      if (scope.params && scope.params->find(e.name))
        throw ModelError("'" + e.name + "' is a free parameter and cannot appear in a guard, update or range");
      throw UnboundConstant("constant '" + e.name + "' has no value");
    }
    case Expr::Kind::Unary: {
      Value v = eval_concrete(e.args[0], scope);
      if (e.name == "!") {
        if (!v.is_bool) throw ModelError("'!' applied to a number: " + to_string(e));
        return {true, !v.b, {}};
      }
      if (v.is_bool) throw ModelError("'-' applied to a boolean: " + to_string(e));
      return {false, false, -v.n};
    }
    case Expr::Kind::Binary: {
      const Value a = eval_concrete(e.args[0], scope);
      const Value b = eval_concrete(e.args[1], scope);
      const std::string& op = e.name;
      if (op == "&" || op == "|") {
        if (!a.is_bool || !b.is_bool) throw ModelError("logical operator on numbers: " + to_string(e));
        return {true, op == "&" ? (a.b && b.b) : (a.b || b.b), {}};
      }
      if (op == "=" || op == "!=") {
        if (a.is_bool != b.is_bool) throw ModelError("comparison of a boolean with a number: " + to_string(e));
        const bool eq = a.is_bool ? a.b == b.b : a.n == b.n;
        return {true, op == "=" ? eq : !eq, {}};
      }
      if (a.is_bool || b.is_bool) throw ModelError("arithmetic on a boolean: " + to_string(e));
      if (op == "<") return {true, a.n < b.n, {}};
      if (op == "<=") return {true, a.n <= b.n, {}};
      if (op == ">") return {true, a.n > b.n, {}};
      if (op == ">=") return {true, a.n >= b.n, {}};
      if (op == "+") return {false, false, a.n + b.n};
      if (op == "-") return {false, false, a.n - b.n};
      if (op == "*") return {false, false, a.n * b.n};
      if (op == "/") {
        if (b.n == 0) throw ModelError("division by zero: " + to_string(e));
        return {false, false, a.n / b.n};
      }
      if (op == "^") {
        const auto k = small_exponent(b.n, e);
        BigRational r = 1;
        for (std::uint32_t i = 0; i < k; ++i) r *= a.n;
        return {false, false, r};
      }
      throw ModelError("unknown operator '" + op + "'");
    }
  }
  throw ModelError("malformed expression");
}

inline RationalFunction eval_symbolic(const Expr& e, const Scope& scope) {
  switch (e.kind) {
    case Expr::Kind::Number:
      return RationalFunction::constant(e.number);
    case Expr::Kind::Bool:
      throw ModelError("boolean where a number was expected: " + to_string(e));
    case Expr::Kind::Identifier:
      if (scope.params)
        if (auto id = scope.params->find(e.name)) return RationalFunction::variable(*id);
      {
        Value v = eval_concrete(e, scope);
        if (v.is_bool) throw ModelError("boolean where a number was expected: " + to_string(e));
        return RationalFunction::constant(v.n);
      }
    case Expr::Kind::Unary:
      if (e.name != "-") throw ModelError("boolean where a number was expected: " + to_string(e));
      return -eval_symbolic(e.args[0], scope);
    case Expr::Kind::Binary: {
      const std::string& op = e.name;
      if (op == "^") {
        const Value ex = eval_concrete(e.args[1], scope);
        const auto k = small_exponent(ex.n, e);
        const RationalFunction base = eval_symbolic(e.args[0], scope);
        RationalFunction r = RationalFunction::constant(BigRational(1));
        for (std::uint32_t i = 0; i < k; ++i) r *= base;
        return r;
      }
      if (op != "+" && op != "-" && op != "*" && op != "/")
        throw ModelError("boolean where a number was expected: " + to_string(e));
      const RationalFunction a = eval_symbolic(e.args[0], scope);
      const RationalFunction b = eval_symbolic(e.args[1], scope);
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (b.is_zero()) throw ModelError("division by zero: " + to_string(e));
      return a / b;
    }
  }
  throw ModelError("malformed expression");
}

inline std::int64_t to_int(const Value& v, const Expr& at) {
  if (v.is_bool) return v.b ? 1 : 0;
  if (v.n.get_den() != 1) throw ModelError("non-integer value for an integer variable: " + to_string(at));
  if (!v.n.get_num().fits_slong_p()) throw ModelError("integer out of range: " + to_string(at));
  return v.n.get_num().get_si();
}

}  // namespace detail

/// States whose valuation satisfies `predicate`.
inline StateSet states_satisfying(const Pdtmc& p, const Expr& predicate) {
  for (const auto& id : predicate.identifiers())
    if (!p.variable_index(id) && !p.fixed.count(id))
      throw UnknownIdentifier(predicate.span, "unknown identifier '" + id + "' in state predicate");
  StateSet out(p.state_count(), false);
  for (std::size_t s = 0; s < p.state_count(); ++s) {
    detail::Scope scope{p.fixed, &p.params, p.variables, p.variable_is_bool, &p.states[s]};
    const auto v = detail::eval_concrete(predicate, scope);
    if (!v.is_bool) throw ModelError("state predicate is not boolean: " + to_string(predicate));
    out[s] = v.b;
  }
  return out;
}

/// Builds the reachable explicit-state chain of `model`. `bindings` fixes
/// constants that the model leaves open; open double constants that remain
/// unbound become parameters.
inline Pdtmc unfold(const GuardedModel& model, const Bindings& bindings = {}) {
  Pdtmc out;
  for (const auto& [name, value] : bindings) {
    const ConstantDecl* c = model.find_constant(name);
    if (!c) throw ModelError("binding for undeclared constant '" + name + "'");
    if (c->value) throw ModelError("constant '" + name + "' already has a value in the model");
    if (c->type == ConstType::Int && value.get_den() != 1)
      throw ModelError("integer constant '" + name + "' bound to " + to_string(value));
    out.fixed[name] = value;
  }
  {
    const std::vector<std::string> no_vars;
    const std::vector<bool> no_flags;
    for (const auto& c : model.constants) {
      if (!c.value) continue;
      detail::Scope scope{out.fixed, nullptr, no_vars, no_flags, nullptr};
      const auto v = detail::eval_concrete(*c.value, scope);
      out.fixed[c.name] = v.is_bool ? BigRational(v.b ? 1 : 0) : v.n;
    }
  }
  for (const auto& name : model.parameters())
    if (!out.fixed.count(name)) out.params.intern(name);

  const auto prob_consts = model.probability_constants();
  for (const auto& name : out.params.names()) {
    const ParamId id = *out.params.find(name);
    if (auto it = model.parameter_bounds.find(name); it != model.parameter_bounds.end()) {
      out.bounds[id] = it->second;
    } else if (prob_consts.count(name)) {
      out.bounds[id] = ParamBounds{BigRational(0), BigRational(1)};
    }
  }

  std::vector<std::pair<std::int64_t, std::int64_t>> domains;
  std::vector<std::int64_t> init;
  const std::vector<std::int64_t> empty_state;
  for (const auto& v : model.variables) {
    out.variables.push_back(v.name);
    out.variable_is_bool.push_back(v.is_bool);
  }
  {
    const std::vector<std::string> no_vars;
    const std::vector<bool> no_flags;
    detail::Scope scope{out.fixed, &out.params, no_vars, no_flags, nullptr};
    for (const auto& v : model.variables) {
      std::int64_t lo = 0, hi = 1;
      if (!v.is_bool) {
        lo = detail::to_int(detail::eval_concrete(v.low, scope), v.low);
        hi = detail::to_int(detail::eval_concrete(v.high, scope), v.high);
        if (lo > hi) throw ModelError("empty range for variable '" + v.name + "'");
      }
      std::int64_t start = lo;
      if (v.init) start = detail::to_int(detail::eval_concrete(*v.init, scope), *v.init);
      if (start < lo || start > hi) throw VariableOutOfRange("initial value of '" + v.name + "' outside its range");
      domains.emplace_back(lo, hi);
      init.push_back(start);
    }
  }

  std::map<std::vector<std::int64_t>, std::size_t> index;
  std::deque<std::size_t> frontier;
  auto intern_state = [&](const std::vector<std::int64_t>& valuation) {
    auto [it, inserted] = index.emplace(valuation, out.states.size());
    if (inserted) {
      out.states.push_back(valuation);
      frontier.push_back(it->second);
    }
    return it->second;
  };
  out.initial = intern_state(init);

  std::vector<std::vector<std::pair<std::size_t, RationalFunction>>> rows;
  while (!frontier.empty()) {
    const std::size_t s = frontier.front();
    frontier.pop_front();
    const std::vector<std::int64_t> current = out.states[s];
    detail::Scope scope{out.fixed, &out.params, out.variables, out.variable_is_bool, &current};

    const Command* enabled = nullptr;
    for (const auto& cmd : model.commands) {
      const auto g = detail::eval_concrete(cmd.guard, scope);
      if (!g.is_bool) throw ModelError("guard is not boolean: " + to_string(cmd.guard));
      if (!g.b) continue;
      if (enabled)
        throw OverlappingGuards("commands '" + to_string(enabled->guard) + "' and '" + to_string(cmd.guard) +
                                "' are both enabled in state " + out.describe(s));
      enabled = &cmd;
    }
    if (!enabled) throw Deadlock("no command enabled in reachable state " + out.describe(s));

    RationalFunction sum;
    std::map<std::size_t, RationalFunction> successors;
    for (const auto& br : enabled->branches) {
      RationalFunction prob = detail::eval_symbolic(br.probability, scope);
      sum += prob;
      if (prob.is_zero()) continue;
      std::vector<std::int64_t> next = current;
      for (const auto& u : br.updates) {
        const auto vi = *scope.variable(u.variable);
        const auto nv = detail::to_int(detail::eval_concrete(u.value, scope), u.value);
        if (nv < domains[vi].first || nv > domains[vi].second)
          throw VariableOutOfRange("update sets '" + u.variable + "' to " + std::to_string(nv) +
                                   ", outside its range, from state " + out.describe(s));
        next[vi] = nv;
      }
      const std::size_t t = intern_state(next);
      successors[t] += prob;
    }
    if (!sum.is_one() && !equivalent(sum, RationalFunction::constant(BigRational(1))))
      throw MalformedDistribution("outgoing probabilities of state " + out.describe(s) + " do not sum to 1");
    if (rows.size() <= s) rows.resize(s + 1);
    for (auto& [t, f] : successors)
      if (!f.is_zero()) rows[s].emplace_back(t, std::move(f));
  }

  rows.resize(out.states.size());
  out.row_start.assign(1, 0);
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (auto& [t, f] : rows[s]) out.transitions.push_back({s, t, std::move(f)});
    out.row_start.push_back(out.transitions.size());
  }

  for (std::size_t vi = 0; vi < out.variables.size(); ++vi) {
    for (std::int64_t val = domains[vi].first; val <= domains[vi].second; ++val) {
      const std::string atom = out.variables[vi] + "=" +
                               (out.variable_is_bool[vi] ? (val ? "true" : "false") : std::to_string(val));
      auto& members = out.labels[atom];
      for (std::size_t s = 0; s < out.states.size(); ++s)
        if (out.states[s][vi] == val) members.push_back(s);
    }
  }
  out.labels["init"] = {out.initial};

  for (const auto& r : model.rewards) {
    auto& values = out.state_rewards[r.label];
    values.assign(out.states.size(), RationalFunction());
    for (std::size_t s = 0; s < out.states.size(); ++s) {
      detail::Scope scope{out.fixed, &out.params, out.variables, out.variable_is_bool, &out.states[s]};
      for (const auto& item : r.items) {
        const auto g = detail::eval_concrete(item.guard, scope);
        if (!g.is_bool) throw ModelError("reward guard is not boolean: " + to_string(item.guard));
        if (g.b) values[s] += detail::eval_symbolic(item.value, scope);
      }
    }
  }
  return out;
}

struct Violation {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string message;
  double value = 0.0;
};

/// Checks that the valuation binds every parameter, respects declared bounds
/// and instantiates every transition to a probability in [0, 1].
inline std::vector<Violation> validate_valuation(const Pdtmc& p, const ParamValuation& v) {
  std::vector<Violation> out;
  bool complete = true;
  for (std::size_t i = 0; i < p.params.size(); ++i) {
    const ParamId id{static_cast<std::uint32_t>(i)};
    auto it = v.find(id);
    if (it == v.end()) {
      out.push_back({0, 0, "parameter '" + p.params.name(id) + "' is unbound", 0.0});
      complete = false;
      continue;
    }
    if (auto b = p.bounds.find(id); b != p.bounds.end()) {
      if (it->second < b->second.low || it->second > b->second.high)
        out.push_back({0, 0,
                       "parameter '" + p.params.name(id) + "' = " + to_decimal_string(it->second) + " outside [" +
                           to_decimal_string(b->second.low) + ", " + to_decimal_string(b->second.high) + "]",
                       to_double(it->second)});
    }
  }
  if (!complete) return out;
  for (const auto& t : p.transitions) {
    const auto used = t.probability.parameters();
    if (used.empty() && t.probability.is_constant()) {
      const auto c = t.probability.constant_value();
      if (c < 0 || c > 1)
        out.push_back({t.source, t.target, "constant probability " + to_decimal_string(c) + " outside [0, 1]", to_double(c)});
      continue;
    }
    try {
      const BigRational value = t.probability.evaluate(v, p.namer());
      if (value < 0 || value > 1)
        out.push_back({t.source, t.target,
                       "probability " + to_decimal_string(value) + " outside [0, 1] on " + p.describe(t.source) +
                           " -> " + p.describe(t.target),
                       to_double(value)});
    } catch (const PoleAtPoint&) {
      out.push_back({t.source, t.target, "pole on " + p.describe(t.source) + " -> " + p.describe(t.target), 0.0});
    }
  }
  return out;
}

/// Transition probabilities of `p` at the point `v`, aligned with p.transitions.
inline std::vector<double> instantiate(const Pdtmc& p, const ParamValuation& v) {
  std::vector<double> probs;
  probs.reserve(p.transitions.size());
  for (const auto& t : p.transitions) probs.push_back(to_double(t.probability.evaluate(v, p.namer())));
  return probs;
}

}  // namespace pdtmc
