#pragma once

#include "pdtmc/lexer.hpp"
#include "pdtmc/model/expr.hpp"

namespace pdtmc::lang {

/// Precedence-climbing parser for model/property expressions:
///   or  := and ('|' and)*        and := not ('&' not)*
///   not := '!' not | rel         rel := add (relop add)?
///   add := mul (('+'|'-') mul)*  mul := neg (('*'|'/') neg)*
///   neg := '-' neg | pow         pow := atom ('^' neg)?
inline Expr parse_expr(TokenStream& ts);

namespace detail {

inline Expr parse_primary(TokenStream& ts) {
  const Token& t = ts.peek();
  if (t.kind == TokenKind::Number) {
    ts.next();
    return Expr::make_number(*parse_rational(t.text), t.span);
  }
  if (t.is_word("true") || t.is_word("false")) {
    ts.next();
    return Expr::make_bool(t.text == "true", t.span);
  }
  if (t.kind == TokenKind::Identifier) {
    ts.next();
    return Expr::make_identifier(t.text, t.span);
  }
  if (t.is("(")) {
    ts.next();
    Expr e = parse_expr(ts);
    ts.expect(")");
    return e;
  }
  ts.fail("expected an expression");
}

inline Expr parse_neg(TokenStream& ts);

inline Expr parse_pow(TokenStream& ts) {
  Expr base = parse_primary(ts);
  if (ts.peek().is("^")) {
    const SourceSpan at = ts.next().span;
    return Expr::make_binary("^", std::move(base), parse_neg(ts), at);
  }
  return base;
}

inline Expr parse_neg(TokenStream& ts) {
  if (ts.peek().is("-")) {
    const SourceSpan at = ts.next().span;
    return Expr::make_unary("-", parse_neg(ts), at);
  }
  return parse_pow(ts);
}

inline Expr parse_mul(TokenStream& ts) {
  Expr lhs = parse_neg(ts);
  while (ts.peek().is("*") || ts.peek().is("/")) {
    const Token op = ts.next();
    lhs = Expr::make_binary(op.text, std::move(lhs), parse_neg(ts), op.span);
  }
  return lhs;
}

inline Expr parse_add(TokenStream& ts) {
  Expr lhs = parse_mul(ts);
  while (ts.peek().is("+") || ts.peek().is("-")) {
    const Token op = ts.next();
    lhs = Expr::make_binary(op.text, std::move(lhs), parse_mul(ts), op.span);
  }
  return lhs;
}

inline Expr parse_rel(TokenStream& ts) {
  Expr lhs = parse_add(ts);
  for (const char* op : {"=", "!=", "<=", ">=", "<", ">"}) {
    if (ts.peek().is(op)) {
      const Token tok = ts.next();
      return Expr::make_binary(tok.text, std::move(lhs), parse_add(ts), tok.span);
    }
  }
  return lhs;
}

inline Expr parse_not(TokenStream& ts) {
  if (ts.peek().is("!")) {
    const SourceSpan at = ts.next().span;
    return Expr::make_unary("!", parse_not(ts), at);
  }
  return parse_rel(ts);
}

inline Expr parse_and(TokenStream& ts) {
  Expr lhs = parse_not(ts);
  while (ts.peek().is("&")) {
    const SourceSpan at = ts.next().span;
    lhs = Expr::make_binary("&", std::move(lhs), parse_not(ts), at);
  }
  return lhs;
}

}  // namespace detail

inline Expr parse_expr(TokenStream& ts) {
  Expr lhs = detail::parse_and(ts);
  while (ts.peek().is("|")) {
    const SourceSpan at = ts.next().span;
    lhs = Expr::make_binary("|", std::move(lhs), detail::parse_and(ts), at);
  }
  return lhs;
}

/// Parses a complete standalone expression.
inline Expr parse_expression(std::string_view text) {
  TokenStream ts(tokenize(text));
  Expr e = parse_expr(ts);
  if (!ts.at_end()) ts.fail("unexpected trailing input");
  return e;
}

}  // namespace pdtmc::lang
