#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdtmc/model/guarded_model.hpp"
#include "pdtmc/ratfunc/rational_function.hpp"

namespace pdtmc {

struct Transition {
  std::size_t source = 0;
  std::size_t target = 0;
  RationalFunction probability;
};

/// Characteristic vector over the states of a chain.
using StateSet = std::vector<bool>;

/// Explicit-state parametric DTMC over the reachable valuations of a model.
/// Built by unfold() and treated as immutable afterwards.
struct Pdtmc {
  ParamSpace params;                           // parameters left free
  std::map<ParamId, ParamBounds> bounds;       // per free parameter, when known
  std::map<std::string, BigRational> fixed;    // every constant with a value
  std::vector<std::string> variables;
  std::vector<bool> variable_is_bool;
  std::vector<std::vector<std::int64_t>> states;  // valuations, booleans as 0/1
  std::size_t initial = 0;
  std::vector<Transition> transitions;  // grouped by source, targets ascending
  std::vector<std::size_t> row_start;   // offsets into transitions, size states+1
  std::map<std::string, std::vector<std::size_t>> labels;  // atom -> sorted states
  std::map<std::string, std::vector<RationalFunction>> state_rewards;

  std::size_t state_count() const noexcept { return states.size(); }

  std::span<const Transition> row(std::size_t s) const {
    return {transitions.data() + row_start[s], row_start[s + 1] - row_start[s]};
  }

  std::optional<std::size_t> variable_index(const std::string& name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i] == name) return i;
    return std::nullopt;
  }

  std::int64_t value(std::size_t state, const std::string& variable) const {
    return states.at(state).at(*variable_index(variable));
  }

  std::string describe(std::size_t state) const {
    std::string out = "(";
    for (std::size_t i = 0; i < variables.size(); ++i) {
      if (i) out += ", ";
      out += variables[i] + "=";
      out += variable_is_bool[i] ? (states[state][i] ? "true" : "false") : std::to_string(states[state][i]);
    }
    return out + ")";
  }

  std::function<std::string(ParamId)> namer() const {
    return [this](ParamId id) { return params.name(id); };
  }
};

/// States reachable from `from` along transitions that are not identically zero.
inline StateSet reachable(const Pdtmc& p, std::size_t from) {
  StateSet seen(p.state_count(), false);
  std::vector<std::size_t> stack{from};
  seen.at(from) = true;
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    for (const auto& t : p.row(s)) {
      if (!seen[t.target] && !t.probability.is_zero()) {
        seen[t.target] = true;
        stack.push_back(t.target);
      }
    }
  }
  return seen;
}

/// States from which some state of `target` is reachable.
inline StateSet can_reach(const Pdtmc& p, const StateSet& target) {
  std::vector<std::vector<std::size_t>> preds(p.state_count());
  for (const auto& t : p.transitions)
    if (!t.probability.is_zero()) preds[t.target].push_back(t.source);
  StateSet seen = target;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < target.size(); ++s)
    if (target[s]) stack.push_back(s);
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    for (auto q : preds[s]) {
      if (!seen[q]) {
        seen[q] = true;
        stack.push_back(q);
      }
    }
  }
  return seen;
}

/// Copy of the chain in which every state of `absorbing` only loops to itself.
inline Pdtmc make_absorbing(const Pdtmc& p, const StateSet& absorbing) {
  Pdtmc out = p;
  out.transitions.clear();
  out.row_start.assign(1, 0);
  for (std::size_t s = 0; s < p.state_count(); ++s) {
    if (absorbing[s]) {
      out.transitions.push_back({s, s, RationalFunction::constant(BigRational(1))});
    } else {
      auto r = p.row(s);
      out.transitions.insert(out.transitions.end(), r.begin(), r.end());
    }
    out.row_start.push_back(out.transitions.size());
  }
  return out;
}

}  // namespace pdtmc
