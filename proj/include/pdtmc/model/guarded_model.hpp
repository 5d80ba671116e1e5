#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdtmc/model/expr.hpp"
#include "pdtmc/ratfunc/param_space.hpp"

namespace pdtmc {

enum class ConstType { Double, Int, Bool };

struct ConstantDecl {
  std::string name;
  ConstType type = ConstType::Double;
  std::optional<Expr> value;  // absent: left open (a parameter if double)
  SourceSpan span;
};

struct VariableDecl {
  std::string name;
  bool is_bool = false;
  Expr low;   // ignored for booleans
  Expr high;  // ignored for booleans
  std::optional<Expr> init;
  SourceSpan span;
};

struct Update {
  std::string variable;
  Expr value;
};

struct Branch {
  Expr probability;
  std::vector<Update> updates;
};

struct Command {
  Expr guard;
  std::vector<Branch> branches;
  SourceSpan span;
};

struct RewardItem {
  Expr guard;
  Expr value;
};

struct RewardDecl {
  std::string label;
  std::vector<RewardItem> items;
};

struct ParamBounds {
  BigRational low;
  BigRational high;
};

struct Diagnostic {
  enum class Severity { Warning, Error };
  Severity severity = Severity::Warning;
  std::string message;
  SourceSpan span;
};

/// A parsed guarded-command model, before any state-space construction.
struct GuardedModel {
  std::string module_name;
  std::vector<ConstantDecl> constants;
  std::vector<VariableDecl> variables;
  std::vector<Command> commands;
  std::vector<RewardDecl> rewards;
  /// Explicit parameter ranges; probability parameters default to [0, 1].
  std::map<std::string, ParamBounds> parameter_bounds;

  const ConstantDecl* find_constant(const std::string& name) const {
    for (const auto& c : constants)
      if (c.name == name) return &c;
    return nullptr;
  }
  const VariableDecl* find_variable(const std::string& name) const {
    for (const auto& v : variables)
      if (v.name == name) return &v;
    return nullptr;
  }

  /// Double constants without an initializer, in declaration order.
  std::vector<std::string> parameters() const {
    std::vector<std::string> out;
    for (const auto& c : constants)
      if (!c.value && c.type == ConstType::Double) out.push_back(c.name);
    return out;
  }

  ParamSpace parameter_space() const { return ParamSpace(parameters()); }

  /// Constants referenced from some branch probability.
  std::set<std::string> probability_constants() const {
    std::set<std::string> out;
    for (const auto& cmd : commands)
      for (const auto& br : cmd.branches)
        for (const auto& id : br.probability.identifiers())
          if (find_constant(id)) out.insert(id);
    return out;
  }

  /// Non-fatal findings: currently constants that nothing references.
  std::vector<Diagnostic> lint() const {
    std::set<std::string> used;
    auto note = [&](const Expr& e) {
      for (const auto& id : e.identifiers()) used.insert(id);
    };
    for (const auto& v : variables) {
      if (!v.is_bool) {
        note(v.low);
        note(v.high);
      }
      if (v.init) note(*v.init);
    }
    for (const auto& cmd : commands) {
      note(cmd.guard);
      for (const auto& br : cmd.branches) {
        note(br.probability);
        for (const auto& u : br.updates) note(u.value);
      }
    }
    for (const auto& r : rewards)
      for (const auto& item : r.items) {
        note(item.guard);
        note(item.value);
      }
    std::vector<Diagnostic> out;
    for (const auto& c : constants)
      if (!used.count(c.name))
        out.push_back({Diagnostic::Severity::Warning, "unused parameter '" + c.name + "'", c.span});
    return out;
  }
};

}  // namespace pdtmc
