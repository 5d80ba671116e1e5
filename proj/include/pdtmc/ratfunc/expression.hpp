#pragma once

#include <string>
#include <string_view>

#include "pdtmc/lexer.hpp"
#include "pdtmc/ratfunc/rational_function.hpp"

namespace pdtmc {

namespace detail {

inline std::string format_monomial(const Monomial& m, const ParamSpace& space) {
  std::string out;
  for (const auto& [idx, e] : m.factors()) {
    if (!out.empty()) out += '*';
    out += space.name(ParamId{idx});
    if (e != 1) out += '^' + std::to_string(e);
  }
  return out;
}

class RationalFunctionParser {
 public:
  RationalFunctionParser(std::string_view text, ParamSpace& space) : ts_(tokenize(text)), space_(space) {}

  RationalFunction parse() {
    RationalFunction f = expr();
    if (!ts_.at_end()) ts_.fail("unexpected trailing input");
    return f;
  }

 private:
  RationalFunction expr() {
    RationalFunction f = term();
    for (;;) {
      if (ts_.accept("+")) {
        f += term();
      } else if (ts_.accept("-")) {
        f -= term();
      } else {
        return f;
      }
    }
  }

  RationalFunction term() {
    RationalFunction f = unary();
    for (;;) {
      if (ts_.accept("*")) {
        f *= unary();
      } else if (ts_.peek().is("/")) {
        const SourceSpan at = ts_.next().span;
        RationalFunction d = unary();
        if (d.is_zero()) throw SyntaxError(at, "division by zero");
        f /= d;
      } else {
        return f;
      }
    }
  }

  RationalFunction unary() {
    if (ts_.accept("-")) return -unary();
    return power();
  }

  RationalFunction power() {
    RationalFunction base = primary();
    if (!ts_.accept("^")) return base;
    const Token& e = ts_.expect_kind(TokenKind::Number, "integer exponent");
    if (e.text.find('.') != std::string::npos || e.text.size() > 9) throw SyntaxError(e.span, "exponent must be a small non-negative integer");
    const unsigned long n = std::stoul(e.text);
    if (base.denominator().is_constant() && base.numerator().term_count() == 1) {
      const Term& t = base.numerator().leading_term();
      Monomial m;
      for (const auto& [idx, ex] : t.monomial.factors()) m = m * Monomial::variable(ParamId{idx}, static_cast<std::uint32_t>(ex * n));
      BigRational c = 1;
      for (unsigned long k = 0; k < n; ++k) c *= t.coefficient;
      return RationalFunction(Polynomial::monomial(std::move(m), c));
    }
    RationalFunction r = RationalFunction::constant(BigRational(1));
    for (unsigned long k = 0; k < n; ++k) r *= base;
    return r;
  }

  RationalFunction primary() {
    const Token& t = ts_.peek();
    if (t.kind == TokenKind::Number) {
      ts_.next();
      return RationalFunction::constant(*parse_rational(t.text));
    }
    if (t.kind == TokenKind::Identifier) {
      ts_.next();
      return RationalFunction::variable(space_.intern(t.text));
    }
    if (ts_.accept("(")) {
      RationalFunction f = expr();
      ts_.expect(")");
      return f;
    }
    ts_.fail("expected number, identifier or '('");
  }

  TokenStream ts_;
  ParamSpace& space_;
};

}  // namespace detail

/// Canonical text of a polynomial: terms in canonical order, coefficients
/// printed as integers or "num/den", factors joined by '*'.
inline std::string format_polynomial(const Polynomial& p, const ParamSpace& space) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : p.terms()) {
    const bool negative = t.coefficient < 0;
    if (first) {
      if (negative) out += '-';
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;
    const BigRational magnitude = abs(t.coefficient);
    const std::string mono = detail::format_monomial(t.monomial, space);
    if (mono.empty()) {
      out += to_string(magnitude);
    } else if (magnitude == 1) {
      out += mono;
    } else {
      out += to_string(magnitude) + "*" + mono;
    }
  }
  return out;
}

/// Golden-file format: the numerator alone when the denominator is 1,
/// otherwise "(num)/(den)".
inline std::string format(const RationalFunction& f, const ParamSpace& space) {
  if (f.denominator().is_constant()) return format_polynomial(f.numerator(), space);
  return "(" + format_polynomial(f.numerator(), space) + ")/(" + format_polynomial(f.denominator(), space) + ")";
}

/// Parses an arithmetic expression over identifiers, integer/decimal
/// literals, + - * / ^ and parentheses. Unknown identifiers are interned
/// into `space`. Throws SyntaxError.
inline RationalFunction parse_rational_function(std::string_view text, ParamSpace& space) {
  return detail::RationalFunctionParser(text, space).parse();
}

}  // namespace pdtmc
