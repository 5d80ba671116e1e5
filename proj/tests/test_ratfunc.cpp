#include <gtest/gtest.h>

#include <random>

#include "pdtmc/ratfunc/compiled.hpp"
#include "pdtmc/ratfunc/expression.hpp"

using namespace pdtmc;

namespace {

BigRational q(const char* text) { return *parse_rational(text); }

struct Space {
  ParamSpace names;
  RationalFunction parse(const char* text) { return parse_rational_function(text, names); }
  std::string show(const RationalFunction& f) const { return format(f, names); }
  ParamValuation at(std::initializer_list<std::pair<const char*, const char*>> items) {
    ParamValuation v;
    for (const auto& [k, val] : items) v[names.intern(k)] = q(val);
    return v;
  }
};

class Random {
 public:
  explicit Random(std::uint64_t seed) : rng_(seed) {}

  BigRational coefficient() {
    std::uniform_int_distribution<int> num(-6, 6), den(1, 4);
    BigRational c(num(rng_), den(rng_));
    c.canonicalize();
    return c;
  }

  Polynomial polynomial(std::size_t vars = 3) {
    std::uniform_int_distribution<int> terms(0, 4), exp(0, 2);
    std::vector<Term> out;
    const int n = terms(rng_);
    for (int i = 0; i < n; ++i) {
      Monomial m;
      for (std::uint32_t v = 0; v < vars; ++v) m = m * Monomial::variable(ParamId{v}, exp(rng_));
      out.push_back({m, coefficient()});
    }
    return Polynomial::from_terms(std::move(out));
  }

  RationalFunction function(std::size_t vars = 3) {
    Polynomial den = polynomial(vars);
    while (den.is_zero()) den = polynomial(vars);
    return RationalFunction(polynomial(vars), den);
  }

  ParamValuation point(std::size_t vars = 3) {
    std::uniform_int_distribution<int> num(-20, 20), den(1, 7);
    ParamValuation v;
    for (std::uint32_t i = 0; i < vars; ++i) {
      BigRational x(num(rng_), den(rng_));
      x.canonicalize();
      v[ParamId{i}] = x;
    }
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

bool has_pole(const RationalFunction& f, const ParamValuation& v) { return f.denominator().evaluate(v) == 0; }

}  // namespace

TEST(BigRational, DecimalsParseExactly) {
  EXPECT_EQ(q("0.4"), BigRational(2, 5));
  EXPECT_EQ(q("-1.25"), BigRational(-5, 4));
  EXPECT_EQ(q("0.05"), BigRational(1, 20));
  EXPECT_EQ(q("7/18"), BigRational(7, 18));
  EXPECT_FALSE(parse_rational("1.2.3"));
  EXPECT_FALSE(parse_rational("abc"));
  EXPECT_FALSE(parse_rational(""));
}

TEST(BigRational, Formatting) {
  EXPECT_EQ(to_string(BigRational(21, 208)), "21/208");
  EXPECT_EQ(to_decimal_string(BigRational(19, 20)), "0.95");
  EXPECT_EQ(to_decimal_string(BigRational(-3)), "-3");
}

TEST(BigRational, NearestDouble) {
  EXPECT_EQ(to_double(BigRational(9, 10)), 0.9);
  EXPECT_EQ(to_double(BigRational(-9, 10)), -0.9);
  EXPECT_EQ(to_double(BigRational(1, 3)), 1.0 / 3.0);
  EXPECT_EQ(to_double(BigRational(0)), 0.0);
  // Both operands are exact doubles, so IEEE division is correctly rounded.
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5000; ++i) {
    const long n = static_cast<long>(rng() % 2000001) - 1000000;
    const long d = 1 + static_cast<long>(rng() % 1000000);
    BigRational q(n, d);
    q.canonicalize();
    EXPECT_EQ(to_double(q), static_cast<double>(n) / static_cast<double>(d)) << n << "/" << d;
  }
}

TEST(Polynomial, CancellationToConstant) {
  Space s;
  const auto r = s.parse("p2 + 1") + s.parse("-p2");
  EXPECT_TRUE(r.is_one());
}

TEST(Polynomial, SingleTermProduct) {
  Space s;
  const auto r = s.parse("p2") * s.parse("p3");
  // Factors print from the highest parameter index down.
  EXPECT_EQ(s.show(r), "p3*p2");
  ASSERT_EQ(r.numerator().term_count(), 1u);
}

TEST(Polynomial, DifferenceOfDenominatorForm) {
  Space s;
  const auto r = s.parse("88*p2 - 100") - s.parse("88*p2");
  ASSERT_TRUE(r.is_constant());
  EXPECT_EQ(r.constant_value(), BigRational(-100));
}

TEST(Polynomial, CanonicalOrderIsGradedLexicographic) {
  Space s;
  s.names.intern("a");
  s.names.intern("b");
  const auto f = s.parse("b + a + 1 + b^2 + a*b + a^2");
  EXPECT_EQ(s.show(f), "a^2 + a*b + b^2 + a + b + 1");
}

TEST(RationalFunction, SelfQuotientIsOne) {
  Space s;
  EXPECT_TRUE((s.parse("x") / s.parse("x")).is_one());
}

TEST(RationalFunction, InversePairCancels) {
  Space s;
  const auto f = s.parse("1/(1 - p7)") * s.parse("1 - p7");
  EXPECT_TRUE(f.is_one());
}

TEST(RationalFunction, OneMinusProduct) {
  Space s;
  const auto f = RationalFunction::constant(BigRational(1)) - s.parse("p8*p5");
  EXPECT_TRUE(f.denominator().is_constant());
  EXPECT_EQ(f.denominator().constant_value(), BigRational(1));
  EXPECT_EQ(s.show(f), "-p8*p5 + 1");
}

TEST(RationalFunction, DivisionByZeroFunction) {
  Space s;
  EXPECT_THROW(s.parse("p2") / RationalFunction(), DivisionByZeroFunction);
  EXPECT_THROW(RationalFunction(Polynomial(1), Polynomial()), DivisionByZeroFunction);
  // In source text the same condition is reported with its position.
  EXPECT_THROW(s.parse("1/(p2 - p2)"), SyntaxError);
}

TEST(RationalFunction, NormalizationCancelsContentAndMonomials) {
  Space s;
  const auto a = s.parse("(2*x)/(4*x)");
  EXPECT_TRUE(a.is_constant());
  EXPECT_EQ(a.constant_value(), BigRational(1, 2));
  const auto b = s.parse("(x^2*y)/(x*y^2)");
  EXPECT_EQ(s.show(b), "(x)/(y)");
  const auto c = s.parse("x/(-y)");
  EXPECT_EQ(s.show(c), "(-x)/(y)");
  EXPECT_GT(c.denominator().leading_term().coefficient, 0);
  const auto d = s.parse("(6*x + 9)/(3*y + 12)");
  EXPECT_EQ(s.show(d), "(2*x + 3)/(y + 4)");
  const auto e = s.parse("(x + 1)/2");
  EXPECT_TRUE(e.denominator().is_constant());
  EXPECT_EQ(e.denominator().constant_value(), BigRational(1));
}

TEST(Evaluate, EscalationAtZeroDetection) {
  Space s;
  const auto f = s.parse("(100*p3*p2 + 98*p2 - 99)/(88*p2 - 100)");
  EXPECT_EQ(f.evaluate(s.at({{"p2", "0"}, {"p3", "0.05"}})), BigRational(99, 100));
  // By hand: (100*0.1*0.9 + 98*0.9 - 99)/(88*0.9 - 100) = (9 + 88.2 - 99)/(79.2 - 100) = 1.8/20.8.
  EXPECT_EQ(f.evaluate(s.at({{"p2", "0.9"}, {"p3", "0.1"}})), BigRational(9, 104));
}

TEST(Evaluate, ConstantIgnoresPoint) {
  Space s;
  EXPECT_EQ(s.parse("20").evaluate(s.at({{"p2", "0.3"}})), BigRational(20));
  EXPECT_EQ(s.parse("20").evaluate({}), BigRational(20));
}

TEST(Evaluate, PoleAndUnbound) {
  Space s;
  const auto f = s.parse("(100*p3*p2 + 98*p2 - 99)/(88*p2 - 100)");
  EXPECT_THROW(f.evaluate(s.at({{"p2", "100/88"}, {"p3", "0"}})), PoleAtPoint);
  try {
    f.evaluate(s.at({{"p2", "0.5"}}), [&](ParamId id) { return s.names.name(id); });
    FAIL() << "expected UnboundParameter";
  } catch (const UnboundParameter& e) {
    EXPECT_NE(std::string(e.what()).find("p3"), std::string::npos);
  }
}

TEST(Equivalence, Examples) {
  Space s;
  EXPECT_TRUE(equivalent(s.parse("(2*p2)/2"), s.parse("p2/1")));
  const auto escalation = s.parse("(100*p3*p2 + 98*p2 - 99)/(88*p2 - 100)");
  const auto widened = RationalFunction(escalation.numerator() * s.parse("p2 + 1").numerator(),
                                        escalation.denominator() * s.parse("p2 + 1").numerator());
  EXPECT_TRUE(equivalent(escalation, widened));
  EXPECT_FALSE(equivalent(escalation, s.parse("(100*p3*p2 + 97*p2 - 99)/(88*p2 - 100)")));
}

TEST(Expression, ParseExamples) {
  Space s;
  EXPECT_TRUE(s.parse("0").is_zero());
  const auto t = s.parse("p7^2*p4*p2*5");
  ASSERT_EQ(t.numerator().term_count(), 1u);
  const auto& term = t.numerator().leading_term();
  EXPECT_EQ(term.coefficient, BigRational(5));
  EXPECT_EQ(term.monomial.exponent(*s.names.find("p7")), 2u);
  EXPECT_EQ(term.monomial.exponent(*s.names.find("p4")), 1u);
  EXPECT_EQ(term.monomial.exponent(*s.names.find("p2")), 1u);
  EXPECT_EQ(term.monomial.degree(), 4u);
  const auto escalation = s.parse("(100*p3*p2 + 98*p2 - 99)/(88*p2 - 100)");
  EXPECT_EQ(escalation.numerator().term_count(), 3u);
  EXPECT_EQ(escalation.denominator().term_count(), 2u);
}

TEST(Expression, FormatUsesFractionsForNonIntegers) {
  Space s;
  EXPECT_EQ(s.show(s.parse("x/3 + 1/2")), "1/3*x + 1/2");
  EXPECT_EQ(s.show(s.parse("0.4*x")), "2/5*x");
}

TEST(Expression, SyntaxErrorsCarryPositions) {
  Space s;
  for (const char* bad : {"(p2 +", "p2 ** 3", "3 +* 4", ")", "p2^x", "1.2.3", "p2 $ 3", "p2^-1"}) {
    try {
      s.parse(bad);
      ADD_FAILURE() << "accepted '" << bad << "'";
    } catch (const SyntaxError& e) {
      EXPECT_LE(e.span().start, e.span().end) << bad;
      EXPECT_LE(e.span().end, std::string(bad).size()) << bad;
      EXPECT_GE(e.span().line, 1u) << bad;
    }
  }
}

TEST(Property, RingAxioms) {
  Random r(11);
  for (int i = 0; i < 200; ++i) {
    const auto a = r.polynomial(), b = r.polynomial(), c = r.polynomial();
    EXPECT_EQ((a + b) + c, a + (b + c));
    EXPECT_EQ(a + b, b + a);
    EXPECT_EQ((a * b) * c, a * (b * c));
    EXPECT_EQ(a * b, b * a);
    EXPECT_EQ(a * (b + c), a * b + a * c);
    EXPECT_TRUE((a - a).is_zero());
    EXPECT_EQ(a * Polynomial(1), a);
  }
}

TEST(Property, EvaluationIsAHomomorphism) {
  Random r(12);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const auto f = r.function(), g = r.function();
    const auto v = r.point();
    if (has_pole(f, v) || has_pole(g, v)) continue;
    const BigRational fv = f.evaluate(v), gv = g.evaluate(v);
    EXPECT_EQ((f + g).evaluate(v), fv + gv);
    EXPECT_EQ((f - g).evaluate(v), fv - gv);
    EXPECT_EQ((f * g).evaluate(v), fv * gv);
    if (!g.is_zero() && gv != 0) {
      const auto quotient = f / g;
      if (!has_pole(quotient, v)) {
        EXPECT_EQ(quotient.evaluate(v), fv / gv);
      }
    }
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Property, EquivalenceRelationAndPointwiseAgreement) {
  Random r(13);
  for (int i = 0; i < 60; ++i) {
    const auto f = r.function();
    Polynomial k = r.polynomial();
    while (k.is_zero()) k = r.polynomial();
    const RationalFunction g(f.numerator() * k, f.denominator() * k);
    Polynomial k2 = r.polynomial();
    while (k2.is_zero()) k2 = r.polynomial();
    const RationalFunction h(g.numerator() * k2, g.denominator() * k2);
    EXPECT_TRUE(equivalent(f, f));
    EXPECT_TRUE(equivalent(f, g));
    EXPECT_TRUE(equivalent(g, f));
    EXPECT_TRUE(equivalent(g, h));
    EXPECT_TRUE(equivalent(f, h));
    int points = 0;
    for (int j = 0; j < 200 && points < 50; ++j) {
      const auto v = r.point();
      if (has_pole(f, v) || has_pole(g, v) || k.evaluate(v) == 0) continue;
      EXPECT_EQ(f.evaluate(v), g.evaluate(v));
      ++points;
    }
    EXPECT_EQ(points, 50);
  }
}

TEST(Property, FormatParseRoundTrip) {
  Random r(14);
  for (int i = 0; i < 200; ++i) {
    Space s;
    for (const char* n : {"x", "y", "z"}) s.names.intern(n);
    const auto f = r.function();
    const std::string text = s.show(f);
    const auto back = s.parse(text.c_str());
    EXPECT_TRUE(equivalent(back, f)) << text;
    EXPECT_EQ(s.show(back), text);
  }
}

TEST(Compiled, MatchesExactEvaluation) {
  Random r(15);
  for (int i = 0; i < 200; ++i) {
    const auto f = r.function();
    const auto v = r.point();
    if (has_pole(f, v)) continue;
    const CompiledFunction c(f);
    std::vector<double> x(3);
    for (const auto& [id, value] : v) x[id.index] = to_double(value);
    const double exact = to_double(f.evaluate(v));
    EXPECT_NEAR(c(x), exact, 1e-9 * std::max(1.0, std::abs(exact)));
  }
}
