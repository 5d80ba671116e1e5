#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdtmc/lang/property.hpp"
#include "pdtmc/model/unfold.hpp"
#include "pdtmc/ratfunc/expression.hpp"

namespace pdtmc {

enum class EliminationOrder { MinFill, Ascending, Descending };

struct EliminationOptions {
  std::size_t term_cap = 200000;
  EliminationOrder order = EliminationOrder::MinFill;
};

struct EliminationStats {
  std::size_t states_eliminated = 0;
  std::size_t max_terms = 0;
};

struct SymbolicResult {
  std::optional<PctlQuery> query;
  RationalFunction expr;
  ParamSpace params;               // names for the ids in expr
  std::set<ParamId> free_params;   // parameters occurring in expr
  Bindings fixed;                  // constants that had values
  EliminationStats stats;

  std::string expression() const { return format(expr, params); }
  BigRational evaluate(const ParamValuation& v) const {
    return expr.evaluate(v, [this](ParamId id) { return params.name(id); });
  }
};

namespace detail {

/// c * q with q having coprime integer coefficients and a positive leading
/// coefficient.
inline std::pair<BigRational, Polynomial> primitive_part(const Polynomial& p) {
  BigInteger lcm_den = 1, gcd_num = 0;
  for (const auto& t : p.terms()) {
    mpz_lcm(lcm_den.get_mpz_t(), lcm_den.get_mpz_t(), t.coefficient.get_den_mpz_t());
    mpz_gcd(gcd_num.get_mpz_t(), gcd_num.get_mpz_t(), t.coefficient.get_num_mpz_t());
  }
  BigRational c(gcd_num, lcm_den);
  c.canonicalize();
  if (p.leading_term().coefficient < 0) c = -c;
  return {c, p.scaled(BigRational(1) / c)};
}

/// Cheap necessary condition for f | n: no variable has a higher degree in f.
inline bool may_divide(const Polynomial& n, const Polynomial& f) {
  if (f.total_degree() > n.total_degree()) return false;
  std::map<std::uint32_t, std::uint32_t> deg;
  for (const auto& t : n.terms())
    for (const auto& [idx, e] : t.monomial.factors()) deg[idx] = std::max(deg[idx], e);
  for (const auto& t : f.terms())
    for (const auto& [idx, e] : t.monomial.factors())
      if (e > deg[idx]) return false;
  return true;
}

/// Numerator over a product of interned denominator factors. Keeping the
/// denominator factored lets common factors be cancelled by exact division,
/// which stops the spurious growth of unreduced fractions.
struct Factored {
  Polynomial num;
  std::map<std::size_t, std::uint32_t> den;  // factor index -> exponent

  bool is_zero() const noexcept { return num.is_zero(); }
};

/// Mutable transition graph used during elimination. All target states are
/// merged into one sink node with index `sink`.
class EliminationGraph {
 public:
  EliminationGraph(std::size_t nodes) : out_(nodes + 1), in_(nodes + 1), sink_(nodes) {}

  std::size_t sink() const noexcept { return sink_; }

  void add(std::size_t from, std::size_t to, const RationalFunction& f) {
    if (f.is_zero()) return;
    auto [c, exps] = split(f.denominator());
    add(from, to, reduce({f.numerator().scaled(BigRational(1) / c), std::move(exps)}));
  }

  std::size_t fill_cost(std::size_t s) const {
    const std::size_t self = out_[s].count(s);
    return (in_[s].size() - self) * (out_[s].size() - self);
  }

  std::size_t term_count() const {
    std::size_t total = 0;
    for (const auto& row : out_)
      for (const auto& [t, f] : row) total += terms(f);
    return total;
  }

  void eliminate(std::size_t e) {
    const Factored stay = edge(e, e);
    std::map<std::size_t, Factored> succ = std::move(out_[e]);
    succ.erase(e);
    out_[e].clear();
    const std::set<std::size_t> preds = std::move(in_[e]);
    in_[e].clear();
    for (const auto& [b, f] : succ) in_[b].erase(e);
    for (std::size_t a : preds) {
      if (a == e) continue;
      auto it = out_[a].find(e);
      const Factored scale = over_leave(it->second, stay);
      out_[a].erase(it);
      for (const auto& [b, f] : succ) add(a, b, product(scale, f));
    }
  }

  /// Probability of reaching the sink from `s` once every other node is gone.
  RationalFunction reach_from(std::size_t s) {
    const Factored r = over_leave(edge(s, sink_), edge(s, s));
    return RationalFunction(r.num, power(r.den));
  }

 private:
  void add(std::size_t from, std::size_t to, Factored f) {
    if (f.is_zero()) return;
    auto it = out_[from].find(to);
    if (it == out_[from].end()) {
      out_[from].emplace(to, std::move(f));
    } else {
      it->second = sum(it->second, f);
      if (it->second.is_zero()) out_[from].erase(it);
    }
    in_[to].insert(from);
  }

  Factored edge(std::size_t from, std::size_t to) const {
    auto it = out_[from].find(to);
    return it == out_[from].end() ? Factored{} : it->second;
  }

  std::size_t terms(const Factored& f) const {
    std::size_t n = f.num.term_count();
    for (const auto& [i, e] : f.den) n += e * factors_[i].term_count();
    return n;
  }

  Polynomial power(const std::map<std::size_t, std::uint32_t>& exps) const {
    Polynomial r(1);
    for (const auto& [i, e] : exps)
      for (std::uint32_t k = 0; k < e; ++k) r *= factors_[i];
    return r;
  }

  std::size_t intern(Polynomial f) {
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (factors_[i] == f) return i;
    factors_.push_back(std::move(f));
    return factors_.size() - 1;
  }

  /// Writes `d` as c * prod factors^e, reusing known factors where they
  /// divide and interning what is left.
  std::pair<BigRational, std::map<std::size_t, std::uint32_t>> split(const Polynomial& d) {
    std::map<std::size_t, std::uint32_t> exps;
    if (d.is_constant()) return {d.constant_value(), exps};
    auto [c, q] = primitive_part(d);
    Monomial g = q.terms().front().monomial;
    for (const auto& t : q.terms()) g = Monomial::gcd(g, t.monomial);
    if (!g.is_one()) {
      q = q.divided_by_monomial(g);
      for (const auto& [idx, e] : g.factors()) exps[intern(Polynomial::variable(ParamId{idx}))] += e;
    }
    for (std::size_t i = 0; i < factors_.size() && !q.is_constant(); ++i) {
      while (!q.is_constant() && may_divide(q, factors_[i])) {
        auto r = Polynomial::divide_exact(q, factors_[i]);
        if (!r) break;
        q = std::move(*r);
        ++exps[i];
      }
    }
    if (q.is_constant()) {
      c *= q.constant_value();
    } else {
      auto [k, rest] = primitive_part(q);
      c *= k;
      ++exps[intern(std::move(rest))];
    }
    return {c, exps};
  }

  Factored reduce(Factored x) const {
    if (x.num.is_zero()) {
      x.den.clear();
      return x;
    }
    for (auto it = x.den.begin(); it != x.den.end();) {
      while (it->second > 0 && may_divide(x.num, factors_[it->first])) {
        auto q = Polynomial::divide_exact(x.num, factors_[it->first]);
        if (!q) break;
        x.num = std::move(*q);
        --it->second;
      }
      it = it->second == 0 ? x.den.erase(it) : std::next(it);
    }
    return x;
  }

  Factored sum(const Factored& a, const Factored& b) const {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.den == b.den) return reduce({a.num + b.num, a.den});
    auto lcm = a.den;
    for (const auto& [i, e] : b.den) lcm[i] = std::max(lcm[i], e);
    auto lift = [&](const Factored& x) {
      std::map<std::size_t, std::uint32_t> extra;
      for (const auto& [i, e] : lcm) {
        auto it = x.den.find(i);
        const std::uint32_t have = it == x.den.end() ? 0 : it->second;
        if (e > have) extra[i] = e - have;
      }
      return x.num * power(extra);
    };
    return reduce({lift(a) + lift(b), std::move(lcm)});
  }

  Factored product(const Factored& a, const Factored& b) const {
    if (a.is_zero() || b.is_zero()) return {};
    Factored r{a.num * b.num, a.den};
    for (const auto& [i, e] : b.den) r.den[i] += e;
    return reduce(std::move(r));
  }

  /// x / (1 - stay). With stay = N / D this is x * D / (D - N).
  Factored over_leave(const Factored& x, const Factored& stay) {
    if (x.is_zero()) return {};
    if (stay.is_zero()) return x;
    const Polynomial g = power(stay.den) - stay.num;
    if (g.is_zero()) throw Error("state elimination hit a state that never leaves");
    auto [c, gexps] = split(g);
    Factored r{x.num.scaled(BigRational(1) / c), x.den};
    std::map<std::size_t, std::uint32_t> lifted;
    for (const auto& [i, e] : stay.den) {
      auto it = r.den.find(i);
      const std::uint32_t cancel = it == r.den.end() ? 0 : std::min(it->second, e);
      if (cancel) {
        it->second -= cancel;
        if (it->second == 0) r.den.erase(it);
      }
      if (e > cancel) lifted[i] = e - cancel;
    }
    r.num = r.num * power(lifted);
    for (const auto& [i, e] : gexps) r.den[i] += e;
    return reduce(std::move(r));
  }

  std::vector<std::map<std::size_t, Factored>> out_;
  std::vector<std::set<std::size_t>> in_;
  std::size_t sink_;
  std::vector<Polynomial> factors_;
};

}  // namespace detail

/// Closed-form probability of eventually reaching `target` from the initial
/// state, by state elimination over the parametric chain.
inline SymbolicResult symbolic_reach(const Pdtmc& p, const StateSet& target, const EliminationOptions& opts = {}) {
  SymbolicResult result;
  result.params = p.params;
  result.fixed = p.fixed;
  auto finish = [&](RationalFunction f) {
    result.expr = std::move(f);
    result.free_params = result.expr.parameters();
    return result;
  };
  if (target.at(p.initial)) return finish(RationalFunction::constant(BigRational(1)));

  const StateSet backward = can_reach(p, target);
  if (!backward[p.initial]) return finish(RationalFunction());

  // Keep states reachable from the initial state without passing through
  // the target and from which the target remains reachable.
  const std::size_t n = p.state_count();
  StateSet keep(n, false);
  std::vector<std::size_t> stack{p.initial};
  keep[p.initial] = true;
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    for (const auto& t : p.row(s)) {
      if (keep[t.target] || target[t.target] || !backward[t.target]) continue;
      keep[t.target] = true;
      stack.push_back(t.target);
    }
  }

  detail::EliminationGraph g(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (!keep[s]) continue;
    for (const auto& t : p.row(s)) {
      if (target[t.target]) {
        g.add(s, g.sink(), t.probability);
      } else if (keep[t.target]) {
        g.add(s, t.target, t.probability);
      }
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t s = 0; s < n; ++s)
    if (keep[s] && s != p.initial) pending.push_back(s);
  if (opts.order == EliminationOrder::Descending) std::reverse(pending.begin(), pending.end());

  result.stats.max_terms = g.term_count();
  while (!pending.empty()) {
    std::size_t pick = 0;
    if (opts.order == EliminationOrder::MinFill) {
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (std::size_t i = 0; i < pending.size(); ++i) {
        const std::size_t cost = g.fill_cost(pending[i]);
        if (cost < best) {
          best = cost;
          pick = i;
        }
      }
    }
    const std::size_t e = pending[pick];
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));
    g.eliminate(e);
    ++result.stats.states_eliminated;
    const std::size_t terms = g.term_count();
    result.stats.max_terms = std::max(result.stats.max_terms, terms);
    if (terms > opts.term_cap)
      throw EliminationBlowup("intermediate expressions grew to " + std::to_string(terms) + " terms (cap " +
                              std::to_string(opts.term_cap) + "); fix more constants and retry");
  }

  return finish(g.reach_from(p.initial));
}

inline SymbolicResult symbolic_reach(const Pdtmc& p, const PctlQuery& q, const EliminationOptions& opts = {}) {
  if (q.is_bounded()) throw Error("step-bounded queries are checked numerically only");
  SymbolicResult r = symbolic_reach(p, states_satisfying(p, q.target), opts);
  r.query = q;
  return r;
}

/// scalar * P, the proxy cost/reward of a reachability result.
inline double proxy_value(const SymbolicResult& result, const BigRational& scalar, const ParamValuation& v) {
  if (scalar == 0) return 0.0;
  return to_double(scalar * result.evaluate(v));
}

}  // namespace pdtmc
