#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pdtmc/ratfunc/rational_function.hpp"

namespace pdtmc {

/// Double-precision evaluator for a fixed rational function; used on the
/// runtime path where exact arithmetic is unnecessary.
class CompiledFunction {
 public:
  CompiledFunction() = default;
  explicit CompiledFunction(const RationalFunction& f)
      : num_(compile(f.numerator())), den_(compile(f.denominator())) {
    for (const auto* poly : {&f.numerator(), &f.denominator()})
      for (const auto& t : poly->terms())
        for (const auto& [idx, e] : t.monomial.factors()) arity_ = std::max<std::size_t>(arity_, idx + 1);
  }

  /// Number of parameter slots `values` must provide.
  std::size_t arity() const noexcept { return arity_; }

  double numerator(std::span<const double> values) const { return eval(num_, values); }
  double denominator(std::span<const double> values) const { return eval(den_, values); }
  double operator()(std::span<const double> values) const { return numerator(values) / denominator(values); }

 private:
  struct Term {
    double coefficient;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> factors;
  };

  static std::vector<Term> compile(const Polynomial& p) {
    std::vector<Term> out;
    out.reserve(p.term_count());
    for (const auto& t : p.terms()) out.push_back({to_double(t.coefficient), t.monomial.factors()});
    return out;
  }

  static double eval(const std::vector<Term>& terms, std::span<const double> values) {
    // Compensated summation keeps cancellation error down on long sums.
    double sum = 0.0, carry = 0.0;
    for (const auto& t : terms) {
      double prod = t.coefficient;
      for (const auto& [idx, e] : t.factors) {
        const double x = values[idx];
        for (std::uint32_t k = 0; k < e; ++k) prod *= x;
      }
      const double y = prod - carry;
      const double s = sum + y;
      carry = (s - sum) - y;
      sum = s;
    }
    return sum;
  }

  std::vector<Term> num_;
  std::vector<Term> den_;
  std::size_t arity_ = 0;
};

}  // namespace pdtmc
