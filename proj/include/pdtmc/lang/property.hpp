#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pdtmc/lang/expr_parser.hpp"

namespace pdtmc {

/// A PCTL reachability query: P=? / P<=b / P>=b over F or F<=k.
struct PctlQuery {
  enum class Kind { Query, UpperBound, LowerBound };

  Kind kind = Kind::Query;
  std::optional<BigRational> bound;
  Expr target;
  std::optional<std::uint64_t> step_bound;  // F<=k when present

  bool is_bounded() const noexcept { return step_bound.has_value(); }

  bool same_as(const PctlQuery& o) const {
    return kind == o.kind && bound == o.bound && step_bound == o.step_bound && target.same_as(o.target);
  }

  /// Whether `value` satisfies the bound (inclusive); always true for P=?.
  bool satisfied_by(double value) const {
    switch (kind) {
      case Kind::Query:
        return true;
      case Kind::UpperBound:
        return value <= to_double(*bound);
      case Kind::LowerBound:
        return value >= to_double(*bound);
    }
    return true;
  }
};

inline std::string to_string(const PctlQuery& q) {
  std::string out = "P";
  switch (q.kind) {
    case PctlQuery::Kind::Query:
      out += "=?";
      break;
    case PctlQuery::Kind::UpperBound:
      out += "<=" + to_decimal_string(*q.bound);
      break;
    case PctlQuery::Kind::LowerBound:
      out += ">=" + to_decimal_string(*q.bound);
      break;
  }
  out += " [ F";
  if (q.step_bound) out += "<=" + std::to_string(*q.step_bound);
  out += " " + to_string(q.target) + " ]";
  return out;
}

namespace lang {

namespace detail {

inline void check_predicate(const Expr& e) {
  if (e.kind == Expr::Kind::Bool) return;
  if (e.kind == Expr::Kind::Binary && e.name == "&") {
    check_predicate(e.args[0]);
    check_predicate(e.args[1]);
    return;
  }
  if (e.kind == Expr::Kind::Binary && pdtmc::detail::precedence(e.name) == 4) {
    const Expr& lhs = e.args[0];
    const Expr& rhs = e.args[1];
    const bool lhs_ok = lhs.kind == Expr::Kind::Identifier;
    const bool rhs_ok = rhs.kind == Expr::Kind::Number || rhs.kind == Expr::Kind::Bool ||
                        rhs.kind == Expr::Kind::Identifier ||
                        (rhs.kind == Expr::Kind::Unary && rhs.name == "-" && rhs.args[0].kind == Expr::Kind::Number);
    if (lhs_ok && rhs_ok) return;
  }
  throw SyntaxError(e.span, "target must be a conjunction of variable comparisons");
}

inline BigRational parse_bound(TokenStream& ts) {
  const Token& num = ts.expect_kind(TokenKind::Number, "probability bound");
  BigRational b = *parse_rational(num.text);
  if (ts.peek().is("/")) {
    ts.next();
    const Token& den = ts.expect_kind(TokenKind::Number, "denominator");
    const BigRational d = *parse_rational(den.text);
    if (d == 0) throw SyntaxError(den.span, "zero denominator");
    b /= d;
  }
  if (b < 0 || b > 1) throw BoundOutOfRange(num.span, "probability bound " + to_decimal_string(b) + " outside [0, 1]");
  return b;
}

}  // namespace detail

/// Parses `P=? [ F pred ]`, `P<=b [ F pred ]`, `P>=b [ F pred ]` and the
/// step-bounded `F<=k` forms.
inline PctlQuery parse_property(std::string_view text) {
  TokenStream ts(tokenize(text));
  PctlQuery q;
  ts.expect_word("P");
  if (ts.accept("=")) {
    ts.expect("?");
    q.kind = PctlQuery::Kind::Query;
  } else if (ts.accept("<=")) {
    q.kind = PctlQuery::Kind::UpperBound;
    q.bound = detail::parse_bound(ts);
  } else if (ts.accept(">=")) {
    q.kind = PctlQuery::Kind::LowerBound;
    q.bound = detail::parse_bound(ts);
  } else {
    ts.fail("expected '=?', '<=' or '>=' after 'P'");
  }
  ts.expect("[");
  ts.expect_word("F");
  if (ts.accept("<=")) {
    const Token& k = ts.expect_kind(TokenKind::Number, "step bound");
    if (k.text.find('.') != std::string::npos || k.text.size() > 18) throw SyntaxError(k.span, "step bound must be a non-negative integer");
    q.step_bound = std::stoull(k.text);
  }
  q.target = parse_expr(ts);
  detail::check_predicate(q.target);
  ts.expect("]");
  if (!ts.at_end()) ts.fail("unexpected trailing input");
  return q;
}

struct PropertyLine {
  std::size_t line = 0;
  std::string text;
  PctlQuery query;
};

/// One property per line; blank lines and `#` comments are skipped.
/// Errors report the line within the file.
inline std::vector<PropertyLine> parse_property_file(std::string_view text) {
  std::vector<PropertyLine> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back({number, line, parse_property(line)});
    } catch (const SyntaxError& e) {
      SourceSpan span = e.span();
      span.line = number;
      span.start += line_offset;
      span.end += line_offset;
      throw SyntaxError(span, e.message());
    }
  }
  return out;
}

}  // namespace lang

}  // namespace pdtmc
