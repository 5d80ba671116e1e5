#pragma once

#include <functional>
#include <set>
#include <string>
#include <utility>

#include "pdtmc/errors.hpp"
#include "pdtmc/ratfunc/polynomial.hpp"

namespace pdtmc {

/// Quotient of two polynomials, kept in a normalized (not fully reduced) form:
/// integer content and common monomial factors are cancelled, the leading
/// coefficient of the denominator is positive and a constant denominator is
/// folded into the numerator. Common polynomial factors may remain, so
/// comparisons go through equivalent().
class RationalFunction {
 public:
  RationalFunction() : den_(1) {}
  RationalFunction(Polynomial num) : num_(std::move(num)), den_(1) {}  // NOLINT(implicit)
  RationalFunction(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw DivisionByZeroFunction();
    normalize();
  }

  static RationalFunction constant(const BigRational& c) { return RationalFunction(Polynomial(c)); }
  static RationalFunction variable(ParamId id) { return RationalFunction(Polynomial::variable(id)); }

  const Polynomial& numerator() const noexcept { return num_; }
  const Polynomial& denominator() const noexcept { return den_; }

  bool is_zero() const noexcept { return num_.is_zero(); }
  bool is_constant() const noexcept { return num_.is_constant() && den_.is_constant(); }
  /// Value of a constant function; only meaningful when is_constant().
  BigRational constant_value() const { return num_.constant_value() / den_.constant_value(); }
  bool is_one() const { return is_constant() && constant_value() == 1; }

  std::size_t term_count() const noexcept { return num_.term_count() + den_.term_count(); }

  std::set<ParamId> parameters() const {
    auto out = num_.parameters();
    auto d = den_.parameters();
    out.insert(d.begin(), d.end());
    return out;
  }

  friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.den_ == b.den_) return RationalFunction(a.num_ + b.num_, a.den_);
    return RationalFunction(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }

  friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) {
    if (b.is_zero()) return a;
    if (a.den_ == b.den_) return RationalFunction(a.num_ - b.num_, a.den_);
    return RationalFunction(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }

  RationalFunction operator-() const {
    RationalFunction r = *this;
    r.num_ = -r.num_;
    return r;
  }

  friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
    if (a.is_zero() || b.is_zero()) return {};
    if (a.den_ == b.num_ && b.den_ == a.num_) return constant(BigRational(1));
    if (a.den_ == b.num_) return RationalFunction(a.num_, b.den_);
    if (b.den_ == a.num_) return RationalFunction(b.num_, a.den_);
    return RationalFunction(a.num_ * b.num_, a.den_ * b.den_);
  }

  friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
    if (b.is_zero()) throw DivisionByZeroFunction();
    return a * b.reciprocal();
  }

  RationalFunction reciprocal() const {
    if (is_zero()) throw DivisionByZeroFunction();
    return RationalFunction(den_, num_);
  }

  RationalFunction& operator+=(const RationalFunction& o) { return *this = *this + o; }
  RationalFunction& operator-=(const RationalFunction& o) { return *this = *this - o; }
  RationalFunction& operator*=(const RationalFunction& o) { return *this = *this * o; }
  RationalFunction& operator/=(const RationalFunction& o) { return *this = *this / o; }

  /// Structural equality of the normalized representation.
  bool operator==(const RationalFunction& o) const { return num_ == o.num_ && den_ == o.den_; }

  /// Exact value at a point. Throws PoleAtPoint or UnboundParameter.
  BigRational evaluate(const ParamValuation& point, const std::function<std::string(ParamId)>& name_of = {}) const {
    BigRational d = den_.evaluate(point, name_of);
    if (d == 0) throw PoleAtPoint("denominator vanishes at the evaluation point");
    return num_.evaluate(point, name_of) / d;
  }

 private:
  void normalize() {
    if (num_.is_zero()) {
      den_ = Polynomial(1);
      return;
    }
    // Shared monomial factor.
    Monomial g = num_.terms().front().monomial;
    for (const auto* p : {&num_, &den_})
      for (const auto& t : p->terms()) {
        if (g.is_one()) break;
        g = Monomial::gcd(g, t.monomial);
      }
    if (!g.is_one()) {
      num_ = num_.divided_by_monomial(g);
      den_ = den_.divided_by_monomial(g);
    }
    if (den_.is_constant()) {
      num_ = num_.scaled(BigRational(1) / den_.constant_value());
      den_ = Polynomial(1);
      return;
    }
    // Integer content, taken jointly over numerator and denominator.
    BigInteger lcm_den = 1;
    for (const auto* p : {&num_, &den_})
      for (const auto& t : p->terms()) mpz_lcm(lcm_den.get_mpz_t(), lcm_den.get_mpz_t(), t.coefficient.get_den_mpz_t());
    BigInteger gcd_num = 0;
    for (const auto* p : {&num_, &den_})
      for (const auto& t : p->terms()) {
        BigInteger scaled = t.coefficient.get_num() * (lcm_den / t.coefficient.get_den());
        mpz_gcd(gcd_num.get_mpz_t(), gcd_num.get_mpz_t(), scaled.get_mpz_t());
      }
    BigRational factor(lcm_den, gcd_num);
    factor.canonicalize();
    if (den_.leading_term().coefficient < 0) factor = -factor;
    if (factor != 1) {
      num_ = num_.scaled(factor);
      den_ = den_.scaled(factor);
    }
    // num = c * den collapses to the constant c.
    if (num_.term_count() == den_.term_count()) {
      const BigRational ratio = num_.leading_term().coefficient / den_.leading_term().coefficient;
      if (num_ == den_.scaled(ratio)) {
        num_ = Polynomial(ratio);
        den_ = Polynomial(1);
      }
    }
  }

  Polynomial num_;
  Polynomial den_;
};

/// True iff a.num * b.den - b.num * a.den is the zero polynomial.
inline bool equivalent(const RationalFunction& a, const RationalFunction& b) {
  if (a == b) return true;
  return (a.numerator() * b.denominator() - b.numerator() * a.denominator()).is_zero();
}

}  // namespace pdtmc
