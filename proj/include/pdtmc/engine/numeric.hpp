#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pdtmc/model/unfold.hpp"

namespace pdtmc {

class InvalidValuation : public Error {
 public:
  using Error::Error;
};

struct NumericOptions {
  enum class Method { LinearSolve, ValueIteration };
  double tolerance = 1e-12;
  std::size_t max_iterations = 1000000;
  Method method = Method::LinearSolve;
};

/// A chain with every transition probability evaluated to a double.
struct InstantiatedChain {
  const Pdtmc* chain = nullptr;
  std::vector<double> probs;  // aligned with chain->transitions

  static InstantiatedChain at(const Pdtmc& p, const ParamValuation& v) {
    const auto violations = validate_valuation(p, v);
    if (!violations.empty()) throw InvalidValuation("invalid valuation: " + violations.front().message);
    return {&p, instantiate(p, v)};
  }
};

namespace detail {

/// Solves M x = rhs in place (M is n x n, row-major) by Gaussian elimination
/// with partial pivoting.
inline std::vector<double> solve_dense(std::vector<double> m, std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r * n + col]) > std::abs(m[pivot * n + col])) pivot = r;
    if (m[pivot * n + col] == 0.0) throw Error("singular system in reachability solve");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m[col * n + c], m[pivot * n + c]);
      std::swap(rhs[col], rhs[pivot]);
    }
    const double d = m[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) m[r * n + c] -= f * m[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= m[i * n + c] * x[c];
    x[i] = acc / m[i * n + i];
  }
  return x;
}

}  // namespace detail

/// Probability of eventually reaching `target` from the initial state of an
/// instantiated chain.
inline double numeric_reach(const InstantiatedChain& ic, const StateSet& target, const NumericOptions& opts = {}) {
  if (!(opts.tolerance > 0)) throw Error("tolerance must be positive");
  const Pdtmc& p = *ic.chain;
  const std::size_t n = p.state_count();
  if (target.at(p.initial)) return 1.0;

  // Backward reachability along transitions with positive probability.
  std::vector<std::vector<std::size_t>> preds(n);
  for (std::size_t i = 0; i < p.transitions.size(); ++i)
    if (ic.probs[i] > 0) preds[p.transitions[i].target].push_back(p.transitions[i].source);
  StateSet positive = target;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s)
    if (target[s]) stack.push_back(s);
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    for (auto q : preds[s])
      if (!positive[q]) {
        positive[q] = true;
        stack.push_back(q);
      }
  }
  if (!positive[p.initial]) return 0.0;

  // States that can reach a zero-probability state without passing the
  // target; every other state reaches the target almost surely.
  StateSet leaks(n, false);
  for (std::size_t s = 0; s < n; ++s)
    if (!positive[s]) {
      leaks[s] = true;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    for (auto q : preds[s])
      if (!leaks[q] && !target[q]) {
        leaks[q] = true;
        stack.push_back(q);
      }
  }
  if (!leaks[p.initial]) return 1.0;

  std::vector<std::size_t> slot(n, SIZE_MAX);
  std::vector<std::size_t> maybe;
  for (std::size_t s = 0; s < n; ++s)
    if (positive[s] && leaks[s]) {
      slot[s] = maybe.size();
      maybe.push_back(s);
    }
  const std::size_t m = maybe.size();
  std::vector<double> b(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const auto s = maybe[k];
    for (std::size_t i = p.row_start[s]; i < p.row_start[s + 1]; ++i)
      if (!leaks[p.transitions[i].target]) b[k] += ic.probs[i];
  }

  if (opts.method == NumericOptions::Method::LinearSolve) {
    std::vector<double> a(m * m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      a[k * m + k] = 1.0;
      const auto s = maybe[k];
      for (std::size_t i = p.row_start[s]; i < p.row_start[s + 1]; ++i) {
        const auto t = p.transitions[i].target;
        if (slot[t] != SIZE_MAX) a[k * m + slot[t]] -= ic.probs[i];
      }
    }
    return detail::solve_dense(std::move(a), std::move(b))[slot[p.initial]];
  }

  std::vector<double> x(m, 0.0), next(m, 0.0);
  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    double delta = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const auto s = maybe[k];
      double acc = b[k];
      for (std::size_t i = p.row_start[s]; i < p.row_start[s + 1]; ++i) {
        const auto t = p.transitions[i].target;
        if (slot[t] != SIZE_MAX) acc += ic.probs[i] * x[slot[t]];
      }
      next[k] = acc;
      delta = std::max(delta, std::abs(acc - x[k]));
    }
    x.swap(next);
    if (delta < opts.tolerance) return x[slot[p.initial]];
  }
  throw NonConvergence("value iteration did not converge within " + std::to_string(opts.max_iterations) +
                       " iterations");
}

inline double numeric_reach(const Pdtmc& p, const ParamValuation& v, const StateSet& target,
                            const NumericOptions& opts = {}) {
  return numeric_reach(InstantiatedChain::at(p, v), target, opts);
}

/// Probability of reaching `target` within `steps` transitions, by backward
/// iteration.
inline double bounded_reach(const InstantiatedChain& ic, const StateSet& target, std::uint64_t steps) {
  const Pdtmc& p = *ic.chain;
  const std::size_t n = p.state_count();
  std::vector<double> x(n, 0.0), next(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) x[s] = target[s] ? 1.0 : 0.0;
  for (std::uint64_t k = 0; k < steps; ++k) {
    for (std::size_t s = 0; s < n; ++s) {
      if (target[s]) {
        next[s] = 1.0;
        continue;
      }
      double acc = 0.0;
      for (std::size_t i = p.row_start[s]; i < p.row_start[s + 1]; ++i) acc += ic.probs[i] * x[p.transitions[i].target];
      next[s] = acc;
    }
    x.swap(next);
  }
  return x[p.initial];
}

inline double bounded_reach(const Pdtmc& p, const ParamValuation& v, const StateSet& target, std::uint64_t steps) {
  return bounded_reach(InstantiatedChain::at(p, v), target, steps);
}

}  // namespace pdtmc
