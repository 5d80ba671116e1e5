#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pdtmc/errors.hpp"
#include "pdtmc/ratfunc/bigrational.hpp"

namespace pdtmc {

/// Expression tree of the model and property languages.
struct Expr {
  enum class Kind { Number, Bool, Identifier, Unary, Binary };

  Kind kind = Kind::Number;
  BigRational number;     // Number
  bool boolean = false;   // Bool
  std::string name;       // Identifier, or the operator of Unary/Binary
  std::vector<Expr> args;
  SourceSpan span;

  static Expr make_number(BigRational v, SourceSpan at = {}) {
    Expr e;
    e.kind = Kind::Number;
    e.number = std::move(v);
    e.span = at;
    return e;
  }
  static Expr make_bool(bool v, SourceSpan at = {}) {
    Expr e;
    e.kind = Kind::Bool;
    e.boolean = v;
    e.span = at;
    return e;
  }
  static Expr make_identifier(std::string n, SourceSpan at = {}) {
    Expr e;
    e.kind = Kind::Identifier;
    e.name = std::move(n);
    e.span = at;
    return e;
  }
  static Expr make_unary(std::string op, Expr operand, SourceSpan at = {}) {
    Expr e;
    e.kind = Kind::Unary;
    e.name = std::move(op);
    e.args.push_back(std::move(operand));
    e.span = at;
    return e;
  }
  static Expr make_binary(std::string op, Expr lhs, Expr rhs, SourceSpan at = {}) {
    Expr e;
    e.kind = Kind::Binary;
    e.name = std::move(op);
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    e.span = at;
    return e;
  }

  /// Structural equality, ignoring spans.
  bool same_as(const Expr& o) const {
    if (kind != o.kind || name != o.name || args.size() != o.args.size()) return false;
    if (kind == Kind::Number && number != o.number) return false;
    if (kind == Kind::Bool && boolean != o.boolean) return false;
    for (std::size_t i = 0; i < args.size(); ++i)
      if (!args[i].same_as(o.args[i])) return false;
    return true;
  }

  void collect_identifiers(std::vector<const Expr*>& out) const {
    if (kind == Kind::Identifier) out.push_back(this);
    for (const auto& a : args) a.collect_identifiers(out);
  }

  std::set<std::string> identifiers() const {
    std::vector<const Expr*> refs;
    collect_identifiers(refs);
    std::set<std::string> out;
    for (const auto* r : refs) out.insert(r->name);
    return out;
  }
};

namespace detail {
inline int precedence(const std::string& op) {
  if (op == "|") return 1;
  if (op == "&") return 2;
  if (op == "=" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
  if (op == "+" || op == "-") return 5;
  if (op == "*" || op == "/") return 6;
  if (op == "^") return 8;
  return 0;
}
}  // namespace detail

/// Renders an expression with the minimum parentheses needed to reparse it
/// to the same tree.
inline std::string to_string(const Expr& e, int parent_prec = 0) {
  switch (e.kind) {
    case Expr::Kind::Number: {
      std::string s = to_decimal_string(e.number);
      return e.number < 0 && parent_prec >= 7 ? "(" + s + ")" : s;
    }
    case Expr::Kind::Bool:
      return e.boolean ? "true" : "false";
    case Expr::Kind::Identifier:
      return e.name;
    case Expr::Kind::Unary: {
      const int prec = e.name == "!" ? 3 : 7;
      std::string s = e.name + to_string(e.args[0], prec);
      return prec < parent_prec ? "(" + s + ")" : s;
    }
    case Expr::Kind::Binary: {
      const int prec = detail::precedence(e.name);
      const bool right_assoc = e.name == "^";
      const bool relational = prec == 4;
      // Left-associative operators need the right operand one level tighter;
      // relations do not chain, so both sides bind tighter.
      const int lp = right_assoc || relational ? prec + 1 : prec;
      const int rp = right_assoc ? prec : prec + 1;
      const std::string sep = (e.name == "^" || e.name == "*" || e.name == "/") ? e.name
                              : (relational ? e.name : " " + e.name + " ");
      std::string s = to_string(e.args[0], lp) + sep + to_string(e.args[1], rp);
      return prec < parent_prec ? "(" + s + ")" : s;
    }
  }
  return {};
}

}  // namespace pdtmc
