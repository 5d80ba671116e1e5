#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdtmc/model/pdtmc.hpp"

namespace pdtmc {

/// A Bernoulli outcome for one parameter at time `time`.
struct Observation {
  std::string param;
  int outcome = 0;  // 0 or 1
  double time = 0.0;
};

/// Bayesian point estimate of one transition probability with exponential
/// ageing of past observations.
///
/// The aged sums are kept incrementally: on each new observation both
/// accumulators are multiplied by alpha^-(t_new - t_last), which reproduces
/// the weights w_l = alpha^-(t_k - t_l) of the batch formula exactly.
struct BeliefState {
  std::string param;
  double prior = 0.5;           // p0
  double prior_strength = 1.0;  // c0
  double decay = 1.0;           // alpha >= 1
  std::uint64_t count = 0;      // k
  double last_time = 0.0;       // t_k
  double aged_sum = 0.0;        // S = sum w_l x_l
  double aged_weight = 0.0;     // W = sum w_l
  /// Mix the prior against W instead of the raw count k. Off by default.
  bool effective_sample_size = false;

  static BeliefState make(std::string param, double prior, double prior_strength, double decay) {
    if (!(prior >= 0.0 && prior <= 1.0)) throw Error("prior for '" + param + "' must lie in [0, 1]");
    if (!(prior_strength > 0.0)) throw Error("prior strength for '" + param + "' must be positive");
    if (!(decay >= 1.0)) throw Error("decay for '" + param + "' must be at least 1");
    BeliefState b;
    b.param = std::move(param);
    b.prior = prior;
    b.prior_strength = prior_strength;
    b.decay = decay;
    return b;
  }
};

inline BeliefState observe(BeliefState b, const Observation& o) {
  if (o.param != b.param) throw Error("observation for '" + o.param + "' applied to belief for '" + b.param + "'");
  if (o.outcome != 0 && o.outcome != 1) throw Error("observation outcome must be 0 or 1");
  const double x = o.outcome;
  if (b.count == 0) {
    b.aged_sum = x;
    b.aged_weight = 1.0;
  } else {
    if (o.time < b.last_time)
      throw TimeRegression("observation for '" + o.param + "' at t=" + std::to_string(o.time) +
                           " precedes the last one at t=" + std::to_string(b.last_time));
    const double w = std::pow(b.decay, -(o.time - b.last_time));
    b.aged_sum = b.aged_sum * w + x;
    b.aged_weight = b.aged_weight * w + 1.0;
  }
  b.count += 1;
  b.last_time = o.time;
  return b;
}

inline double estimate(const BeliefState& b) {
  if (b.count == 0) return b.prior;
  const double n = b.effective_sample_size ? b.aged_weight : static_cast<double>(b.count);
  const double c0 = b.prior_strength;
  // Mixture of prior and aged mean over a common denominator: one rounding
  // in the final division.
  return (c0 * b.prior * b.aged_weight + n * b.aged_sum) / ((c0 + n) * b.aged_weight);
}

using BeliefSet = std::map<std::string, BeliefState>;

struct EstimateResult {
  ParamValuation valuation;
  std::map<std::string, double> values;
  std::vector<std::string> warnings;
};

/// Current estimates for every free parameter of `p`, clamped into the
/// declared bounds. Clamping is reported as a warning.
inline EstimateResult estimate_all(const BeliefSet& beliefs, const Pdtmc& p) {
  EstimateResult out;
  for (const auto& name : p.params.names()) {
    auto it = beliefs.find(name);
    if (it == beliefs.end()) throw MissingBelief("no belief for free parameter '" + name + "'");
    const ParamId id = *p.params.find(name);
    double value = estimate(it->second);
    if (auto b = p.bounds.find(id); b != p.bounds.end()) {
      const double lo = to_double(b->second.low);
      const double hi = to_double(b->second.high);
      if (value < lo || value > hi) {
        const double clamped = std::clamp(value, lo, hi);
        out.warnings.push_back("estimate of '" + name + "' = " + std::to_string(value) + " clamped to " +
                               std::to_string(clamped));
        value = clamped;
      }
    }
    out.values[name] = value;
    out.valuation[id] = rational_from_double(value);
  }
  return out;
}

inline void to_json(nlohmann::json& j, const BeliefState& b) {
  j = nlohmann::json{{"param", b.param},   {"p0", b.prior},     {"c0", b.prior_strength},
                     {"alpha", b.decay},   {"k", b.count},      {"t_k", b.last_time},
                     {"S", b.aged_sum},    {"W", b.aged_weight}};
  if (b.effective_sample_size) j["effective_sample_size"] = true;
}

inline void from_json(const nlohmann::json& j, BeliefState& b) {
  b = BeliefState::make(j.at("param").get<std::string>(), j.at("p0").get<double>(), j.at("c0").get<double>(),
                        j.at("alpha").get<double>());
  b.count = j.at("k").get<std::uint64_t>();
  b.last_time = j.at("t_k").get<double>();
  b.aged_sum = j.at("S").get<double>();
  b.aged_weight = j.at("W").get<double>();
  b.effective_sample_size = j.value("effective_sample_size", false);
}

}  // namespace pdtmc
