#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pdtmc/errors.hpp"
#include "pdtmc/ratfunc/bigrational.hpp"
#include "pdtmc/ratfunc/param_space.hpp"

namespace pdtmc {

/// Power product of parameters. Factors are kept sorted by parameter index and
/// never carry a zero exponent, so the unit monomial has no factors.
class Monomial {
 public:
  using Factor = std::pair<std::uint32_t, std::uint32_t>;  // (param index, exponent)

  Monomial() = default;

  static Monomial variable(ParamId id, std::uint32_t exponent = 1) {
    Monomial m;
    if (exponent > 0) {
      m.factors_.emplace_back(id.index, exponent);
      m.degree_ = exponent;
    }
    return m;
  }

  const std::vector<Factor>& factors() const noexcept { return factors_; }
  std::uint64_t degree() const noexcept { return degree_; }
  bool is_one() const noexcept { return factors_.empty(); }

  std::uint32_t exponent(ParamId id) const {
    for (const auto& [idx, e] : factors_) {
      if (idx == id.index) return e;
      if (idx > id.index) break;
    }
    return 0;
  }

  friend Monomial operator*(const Monomial& a, const Monomial& b) {
    Monomial r;
    r.factors_.reserve(a.factors_.size() + b.factors_.size());
    auto i = a.factors_.begin();
    auto j = b.factors_.begin();
    while (i != a.factors_.end() && j != b.factors_.end()) {
      if (i->first < j->first) {
        r.factors_.push_back(*i++);
      } else if (j->first < i->first) {
        r.factors_.push_back(*j++);
      } else {
        r.factors_.emplace_back(i->first, i->second + j->second);
        ++i;
        ++j;
      }
    }
    r.factors_.insert(r.factors_.end(), i, a.factors_.end());
    r.factors_.insert(r.factors_.end(), j, b.factors_.end());
    r.degree_ = a.degree_ + b.degree_;
    return r;
  }

  bool divides(const Monomial& other) const {
    auto j = other.factors_.begin();
    for (const auto& [idx, e] : factors_) {
      while (j != other.factors_.end() && j->first < idx) ++j;
      if (j == other.factors_.end() || j->first != idx || j->second < e) return false;
    }
    return true;
  }

  /// other / this; requires divides(other).
  Monomial quotient_of(const Monomial& other) const {
    Monomial r;
    auto i = factors_.begin();
    for (const auto& [idx, e] : other.factors_) {
      std::uint32_t sub = 0;
      if (i != factors_.end() && i->first == idx) sub = (i++)->second;
      if (e > sub) r.factors_.emplace_back(idx, e - sub);
    }
    r.degree_ = other.degree_ - degree_;
    return r;
  }

  static Monomial gcd(const Monomial& a, const Monomial& b) {
    Monomial r;
    auto j = b.factors_.begin();
    for (const auto& [idx, e] : a.factors_) {
      while (j != b.factors_.end() && j->first < idx) ++j;
      if (j != b.factors_.end() && j->first == idx) {
        const auto m = std::min(e, j->second);
        r.factors_.emplace_back(idx, m);
        r.degree_ += m;
      }
    }
    return r;
  }

  bool operator==(const Monomial& other) const { return factors_ == other.factors_; }

  /// Canonical term order: graded, then lexicographic by parameter index with
  /// larger exponents first. Returns true when a is ranked ahead of b.
  friend bool precedes(const Monomial& a, const Monomial& b) {
    if (a.degree_ != b.degree_) return a.degree_ > b.degree_;
    auto i = a.factors_.begin();
    auto j = b.factors_.begin();
    while (i != a.factors_.end() && j != b.factors_.end()) {
      if (i->first != j->first) return i->first < j->first;
      if (i->second != j->second) return i->second > j->second;
      ++i;
      ++j;
    }
    return i != a.factors_.end() && j == b.factors_.end();
  }

 private:
  std::vector<Factor> factors_;
  std::uint64_t degree_ = 0;
};

struct Term {
  Monomial monomial;
  BigRational coefficient;
};

/// Sparse multivariate polynomial with exact rational coefficients.
/// Terms are held in canonical order with no zero coefficients.
class Polynomial {
 public:
  Polynomial() = default;

  explicit Polynomial(const BigRational& constant) {
    if (constant != 0) terms_.push_back(Term{Monomial{}, constant});
  }
  explicit Polynomial(long constant) : Polynomial(BigRational(constant)) {}

  static Polynomial variable(ParamId id, std::uint32_t exponent = 1) {
    Polynomial p;
    p.terms_.push_back(Term{Monomial::variable(id, exponent), BigRational(1)});
    return p;
  }

  static Polynomial monomial(Monomial m, BigRational coefficient) {
    Polynomial p;
    if (coefficient != 0) p.terms_.push_back(Term{std::move(m), std::move(coefficient)});
    return p;
  }

  /// Builds a polynomial from terms in any order; combines duplicates.
  static Polynomial from_terms(std::vector<Term> terms) {
    std::stable_sort(terms.begin(), terms.end(),
                     [](const Term& a, const Term& b) { return precedes(a.monomial, b.monomial); });
    Polynomial p;
    for (auto& t : terms) {
      if (!p.terms_.empty() && p.terms_.back().monomial == t.monomial) {
        p.terms_.back().coefficient += t.coefficient;
        if (p.terms_.back().coefficient == 0) p.terms_.pop_back();
      } else if (t.coefficient != 0) {
        p.terms_.push_back(std::move(t));
      }
    }
    return p;
  }

  const std::vector<Term>& terms() const noexcept { return terms_; }
  std::size_t term_count() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }
  bool is_constant() const noexcept { return terms_.empty() || (terms_.size() == 1 && terms_[0].monomial.is_one()); }
  BigRational constant_value() const {
    if (terms_.empty() || !terms_.back().monomial.is_one()) return BigRational(0);
    return terms_.back().coefficient;
  }
  const Term& leading_term() const { return terms_.front(); }

  std::uint64_t total_degree() const { return terms_.empty() ? 0 : terms_.front().monomial.degree(); }

  std::set<ParamId> parameters() const {
    std::set<ParamId> out;
    for (const auto& t : terms_)
      for (const auto& [idx, e] : t.monomial.factors()) out.insert(ParamId{idx});
    return out;
  }

  bool operator==(const Polynomial& other) const {
    if (terms_.size() != other.terms_.size()) return false;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (!(terms_[i].monomial == other.terms_[i].monomial) || terms_[i].coefficient != other.terms_[i].coefficient)
        return false;
    }
    return true;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) { return merge(a.terms_, b.terms_, false); }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return merge(a.terms_, b.terms_, true); }

  Polynomial operator-() const {
    Polynomial r = *this;
    for (auto& t : r.terms_) t.coefficient = -t.coefficient;
    return r;
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    const Polynomial& outer = a.terms_.size() <= b.terms_.size() ? a : b;
    const Polynomial& inner = &outer == &a ? b : a;
    // Multiplying by a monomial preserves the term order, so each partial
    // product is already sorted and the partials can be merged pairwise.
    std::vector<Polynomial> partial;
    partial.reserve(outer.terms_.size());
    for (const auto& t : outer.terms_) partial.push_back(inner.times_term(t));
    while (partial.size() > 1) {
      std::vector<Polynomial> next;
      next.reserve((partial.size() + 1) / 2);
      for (std::size_t i = 0; i + 1 < partial.size(); i += 2)
        next.push_back(merge(partial[i].terms_, partial[i + 1].terms_, false));
      if (partial.size() % 2 == 1) next.push_back(std::move(partial.back()));
      partial = std::move(next);
    }
    return std::move(partial.front());
  }

  Polynomial& operator+=(const Polynomial& o) { return *this = *this + o; }
  Polynomial& operator-=(const Polynomial& o) { return *this = *this - o; }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  Polynomial scaled(const BigRational& factor) const {
    if (factor == 0) return {};
    Polynomial r = *this;
    for (auto& t : r.terms_) t.coefficient *= factor;
    return r;
  }

  Polynomial times_term(const Term& term) const {
    Polynomial r;
    r.terms_.reserve(terms_.size());
    for (const auto& t : terms_) r.terms_.push_back(Term{t.monomial * term.monomial, t.coefficient * term.coefficient});
    return r;
  }

  /// Divides every monomial by m; requires m to divide each of them.
  Polynomial divided_by_monomial(const Monomial& m) const {
    if (m.is_one()) return *this;
    Polynomial r;
    r.terms_.reserve(terms_.size());
    for (const auto& t : terms_) r.terms_.push_back(Term{m.quotient_of(t.monomial), t.coefficient});
    return r;
  }

  /// Exact quotient a / b if b divides a, otherwise nullopt.
  static std::optional<Polynomial> divide_exact(const Polynomial& a, const Polynomial& b) {
    if (b.is_zero()) throw DivisionByZeroFunction();
    Polynomial remainder = a;
    std::vector<Term> quotient;
    const Term& lead = b.leading_term();
    while (!remainder.is_zero()) {
      const Term& r = remainder.leading_term();
      if (!lead.monomial.divides(r.monomial)) return std::nullopt;
      Term q{lead.monomial.quotient_of(r.monomial), r.coefficient / lead.coefficient};
      remainder -= b.times_term(q);
      quotient.push_back(std::move(q));
    }
    return from_terms(std::move(quotient));
  }

  /// Exact evaluation. `name_of` labels unbound parameters in the error.
  BigRational evaluate(const ParamValuation& point,
                       const std::function<std::string(ParamId)>& name_of = {}) const {
    BigRational sum = 0;
    std::map<std::pair<std::uint32_t, std::uint32_t>, BigRational> powers;
    for (const auto& t : terms_) {
      BigRational prod = t.coefficient;
      for (const auto& [idx, e] : t.monomial.factors()) {
        auto it = powers.find({idx, e});
        if (it == powers.end()) {
          auto v = point.find(ParamId{idx});
          if (v == point.end())
            throw UnboundParameter(name_of ? name_of(ParamId{idx}) : "#" + std::to_string(idx));
          BigRational pw = 1;
          for (std::uint32_t k = 0; k < e; ++k) pw *= v->second;
          it = powers.emplace(std::make_pair(idx, e), pw).first;
        }
        prod *= it->second;
      }
      sum += prod;
    }
    return sum;
  }

 private:
  static Polynomial merge(const std::vector<Term>& a, const std::vector<Term>& b, bool subtract) {
    Polynomial r;
    r.terms_.reserve(a.size() + b.size());
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
      if (precedes(i->monomial, j->monomial)) {
        r.terms_.push_back(*i++);
      } else if (precedes(j->monomial, i->monomial)) {
        r.terms_.push_back(subtract ? Term{j->monomial, -j->coefficient} : *j);
        ++j;
      } else {
        BigRational c = subtract ? BigRational(i->coefficient - j->coefficient)
                                 : BigRational(i->coefficient + j->coefficient);
        if (c != 0) r.terms_.push_back(Term{i->monomial, std::move(c)});
        ++i;
        ++j;
      }
    }
    for (; i != a.end(); ++i) r.terms_.push_back(*i);
    for (; j != b.end(); ++j) r.terms_.push_back(subtract ? Term{j->monomial, -j->coefficient} : *j);
    return r;
  }

  std::vector<Term> terms_;
};

}  // namespace pdtmc
