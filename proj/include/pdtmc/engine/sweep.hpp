#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "pdtmc/engine/symbolic.hpp"
#include "pdtmc/ratfunc/compiled.hpp"

namespace pdtmc {

struct SweepAxis {
  std::string param;
  double low = 0.0;
  double high = 1.0;
};

/// Evaluates scalar * P[F target] over a resolution x resolution grid of two
/// free parameters; every other parameter must be fixed in the chain.
struct SweepSpec {
  SweepAxis x;
  SweepAxis y;
  std::size_t resolution = 101;
  double scalar = 1.0;
};

struct SweepGrid {
  std::string x_param, y_param;
  std::vector<double> xs, ys;
  std::vector<double> values;  // x-major: values[i * ys.size() + j]
  std::size_t invalid_cells = 0;  // cells whose valuation leaves [0, 1] somewhere

  double at(std::size_t i, std::size_t j) const { return values[i * ys.size() + j]; }
};

namespace detail {

inline std::vector<double> axis_points(const SweepAxis& a, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = i + 1 == n ? a.high : a.low + (a.high - a.low) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace detail

/// Grid of the closed-form expression. Cells are independent, so the result
/// does not depend on `workers`.
inline SweepGrid sweep(const Pdtmc& p, const StateSet& target, const SweepSpec& spec, unsigned workers = 1,
                       const EliminationOptions& opts = {}) {
  if (spec.resolution < 2) throw Error("sweep resolution must be at least 2");
  if (spec.x.param == spec.y.param) throw Error("sweep axes must be two different parameters");
  const auto xid = p.params.find(spec.x.param);
  const auto yid = p.params.find(spec.y.param);
  if (!xid) throw Error("sweep parameter '" + spec.x.param + "' is not free in the model");
  if (!yid) throw Error("sweep parameter '" + spec.y.param + "' is not free in the model");
  if (p.params.size() != 2)
    throw Error("sweep needs exactly two free parameters; fix the others with constants");
  for (const auto* axis : {&spec.x, &spec.y}) {
    const ParamId id = *p.params.find(axis->param);
    if (!(axis->low <= axis->high)) throw Error("empty range for '" + axis->param + "'");
    if (auto b = p.bounds.find(id); b != p.bounds.end())
      if (axis->low < to_double(b->second.low) || axis->high > to_double(b->second.high))
        throw Error("range of '" + axis->param + "' exceeds its declared bounds");
  }

  const SymbolicResult sym = symbolic_reach(p, target, opts);
  const CompiledFunction f(sym.expr);
  std::vector<CompiledFunction> transitions;
  for (const auto& t : p.transitions) transitions.emplace_back(t.probability);

  SweepGrid g;
  g.x_param = spec.x.param;
  g.y_param = spec.y.param;
  g.xs = detail::axis_points(spec.x, spec.resolution);
  g.ys = detail::axis_points(spec.y, spec.resolution);
  const std::size_t cells = g.xs.size() * g.ys.size();
  g.values.assign(cells, 0.0);
  std::vector<char> invalid(cells, 0);

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> point(2);
    for (std::size_t c = begin; c < end; ++c) {
      point[xid->index] = g.xs[c / g.ys.size()];
      point[yid->index] = g.ys[c % g.ys.size()];
      const double den = f.denominator(point);
      g.values[c] = den == 0.0 ? std::nan("") : spec.scalar * f.numerator(point) / den;
      for (const auto& t : transitions) {
        const double v = t(point);
        if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) {
          invalid[c] = 1;
          break;
        }
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cells)));
  if (workers == 1) {
    work(0, cells);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (cells + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = std::min(cells, w * chunk), e = std::min(cells, b + chunk);
      pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }
  g.invalid_cells = static_cast<std::size_t>(std::count(invalid.begin(), invalid.end(), 1));
  return g;
}

inline std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// CSV with a header naming the two parameters, rows in x-major order.
inline void write_csv(std::ostream& out, const SweepGrid& g) {
  out << g.x_param << ',' << g.y_param << ",value\n";
  for (std::size_t i = 0; i < g.xs.size(); ++i)
    for (std::size_t j = 0; j < g.ys.size(); ++j)
      out << format_g12(g.xs[i]) << ',' << format_g12(g.ys[j]) << ',' << format_g12(g.at(i, j)) << '\n';
}

}  // namespace pdtmc
