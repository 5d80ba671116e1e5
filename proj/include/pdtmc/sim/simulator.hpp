#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdtmc/learner/belief.hpp"
#include "pdtmc/monitor/monitor.hpp"

namespace pdtmc {

/// Name of the generator, written into trace metadata.
inline constexpr const char* kRngName = "mt19937_64/splitmix64-seeded";

/// SplitMix64 finaliser, used to derive independent per-episode seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Portable stream: mt19937_64 output mapped to [0, 1) with 53 bits, so the
/// same seed gives the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  static Rng for_episode(std::uint64_t seed, std::uint64_t episode) {
    return Rng(splitmix64(seed ^ splitmix64(episode + 1)));
  }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Scalars for the reward structure; defaults match the dressing model.
struct RewardScheme {
  double base_reward_s3 = 20.0;
  double reward_s7 = 10.0;
  double cost_s2 = 10.0;
  double cost_s8 = 5.0;

  /// Defaults overridden by whatever the chain has bound.
  static RewardScheme from(const Pdtmc& p) {
    RewardScheme r;
    auto take = [&](const char* name, double& slot) {
      if (auto it = p.fixed.find(name); it != p.fixed.end()) slot = to_double(it->second);
    };
    take("BASE_REWARD_S3", r.base_reward_s3);
    take("R_S7", r.reward_s7);
    take("C_S2", r.cost_s2);
    take("C_S8", r.cost_s8);
    return r;
  }
};

struct SimConfig {
  ParamValuation ground_truth;
  std::uint64_t episodes = 1000;
  std::uint64_t seed = 1;
  double decay_rate = 0.5;
  /// Per action, parameter name -> multiplier applied after the decision.
  std::map<Action, std::map<std::string, double>> interventions;
  std::uint64_t max_steps_per_episode = 10000;
  RewardScheme rewards;
};

enum class Outcome { Completed, Aborted, Truncated };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Completed:
      return "completed";
    case Outcome::Aborted:
      return "aborted";
    case Outcome::Truncated:
      return "truncated";
  }
  return "truncated";
}

struct TraceStep {
  std::uint64_t step = 0;
  std::size_t state = 0;
  std::size_t next = 0;
  std::size_t transition = 0;  // index into the chain's transitions
};

struct EpisodeTrace {
  std::uint64_t episode = 0;
  std::size_t start = 0;
  std::vector<TraceStep> steps;
  double reward = 0.0;
  double completion_reward = 0.0;  // the decayed s=3 part of `reward`
  double cost = 0.0;
  Outcome outcome = Outcome::Truncated;

  /// Whether some state with s = `value` occurs in the trace.
  bool visits(const Pdtmc& p, std::int64_t value) const {
    const auto si = *p.variable_index("s");
    if (p.states[start][si] == value) return true;
    for (const auto& st : steps)
      if (p.states[st.next][si] == value) return true;
    return false;
  }
};

namespace detail {

inline std::vector<double> point_of(const Pdtmc& p, const ParamValuation& v) {
  std::vector<double> out(p.params.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const ParamId id{static_cast<std::uint32_t>(i)};
    auto it = v.find(id);
    if (it == v.end()) throw UnboundParameter(p.params.name(id));
    out[i] = to_double(it->second);
  }
  return out;
}

}  // namespace detail

/// Samples one dressing attempt: from the initial state until the first
/// arrival at s=9, or until `max_steps_per_episode` transitions.
inline EpisodeTrace run_episode(const InstantiatedChain& ic, const SimConfig& cfg, Rng& rng,
                                std::uint64_t episode = 0) {
  const Pdtmc& p = *ic.chain;
  const auto si = p.variable_index("s");
  const auto ti = p.variable_index("time_step");
  if (!si || !ti) throw Error("simulation needs the variables 's' and 'time_step'");
  EpisodeTrace trace;
  trace.episode = episode;
  trace.start = p.initial;
  std::size_t cur = p.initial;
  for (std::uint64_t step = 0; step < cfg.max_steps_per_episode; ++step) {
    const std::size_t lo = p.row_start[cur], hi = p.row_start[cur + 1];
    const double u = rng.uniform();
    std::size_t pick = hi - 1;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      acc += ic.probs[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    // Skip zero-probability tail entries picked only through rounding.
    while (pick > lo && ic.probs[pick] == 0.0) --pick;
    const std::size_t next = p.transitions[pick].target;
    trace.steps.push_back({step, cur, next, pick});
    const std::int64_t s = p.states[next][*si];
    if (s == 3) {
      const double r = std::exp(-cfg.decay_rate * static_cast<double>(p.states[next][*ti])) * cfg.rewards.base_reward_s3;
      trace.reward += r;
      trace.completion_reward += r;
    } else if (s == 7) {
      trace.reward += cfg.rewards.reward_s7;
    } else if (s == 2) {
      trace.cost += cfg.rewards.cost_s2;
    } else if (s == 8) {
      trace.cost += cfg.rewards.cost_s8;
    } else if (s == 9) {
      trace.outcome = p.states[cur][*si] == 3 ? Outcome::Completed : Outcome::Aborted;
      return trace;
    }
    cur = next;
  }
  trace.outcome = Outcome::Truncated;
  return trace;
}

/// Open-loop batch; episode i uses the stream derived from (seed, i), so the
/// result does not depend on how episodes are scheduled.
inline std::vector<EpisodeTrace> run_batch(const Pdtmc& p, const SimConfig& cfg) {
  const auto ic = InstantiatedChain::at(p, cfg.ground_truth);
  std::vector<EpisodeTrace> out;
  out.reserve(cfg.episodes);
  for (std::uint64_t e = 0; e < cfg.episodes; ++e) {
    Rng rng = Rng::for_episode(cfg.seed, e);
    out.push_back(run_episode(ic, cfg, rng, e));
  }
  return out;
}

/// Bernoulli observations produced by one step between values of s. Steps
/// that leave s=0, s=1 or s=6 through their timeout command carry none.
inline std::vector<Observation> observations_for_step(std::int64_t from, std::int64_t to, double time) {
  std::vector<Observation> out;
  auto emit = [&](const char* param, bool x) { out.push_back({param, x ? 1 : 0, time}); };
  switch (from) {
    case 0:
      if (to == 0 || to == 1 || to == 2) {
        emit("P2", to == 1);
        emit("P9", to == 0);
      }
      break;
    case 1:
      if (to == 1 || to == 4 || to == 2) {
        emit("P3", to == 1);
        emit("P4", to == 4);
      }
      break;
    case 4:
      emit("P5", to == 5);
      emit("P6", to == 6);
      break;
    case 5:
      emit("P8", to == 4);
      break;
    case 6:
      if (to == 6 || to == 7) emit("P7", to == 7);
      break;
    case 9:
      emit("p10", to == 9);
      break;
    default:
      break;
  }
  return out;
}

/// Observations for every step of `trace`. Times are global step counters:
/// `time_offset` plus the step index.
inline std::vector<Observation> map_observations(const Pdtmc& p, const EpisodeTrace& trace, double time_offset = 0.0) {
  const auto si = *p.variable_index("s");
  std::vector<Observation> out;
  for (const auto& st : trace.steps) {
    auto obs = observations_for_step(p.states[st.state][si], p.states[st.next][si],
                                     time_offset + static_cast<double>(st.step));
    out.insert(out.end(), obs.begin(), obs.end());
  }
  return out;
}

struct ClosedLoopStep {
  EpisodeTrace trace;
  MonitorReport report;
  Decision decision;
  std::vector<std::string> warnings;
  std::map<std::string, double> ground_truth;  // in force during the episode
};

/// Sequential simulate / learn / evaluate / decide loop. The decision after
/// episode i changes the ground truth used from episode i+1 on.
inline std::vector<ClosedLoopStep> run_closed_loop(const Pdtmc& p, const SimConfig& cfg, BeliefSet& beliefs,
                                                   const MonitorCache& monitor, const DecisionPolicy& policy = {}) {
  if (monitor.chain != &p) throw Error("monitor cache was built for a different chain");
  std::vector<double> truth = detail::point_of(p, cfg.ground_truth);
  std::vector<ClosedLoopStep> out;
  double clock = 0.0;
  for (std::uint64_t e = 0; e < cfg.episodes; ++e) {
    ClosedLoopStep step;
    ParamValuation v;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const ParamId id{static_cast<std::uint32_t>(i)};
      v[id] = rational_from_double(truth[i]);
      step.ground_truth[p.params.name(id)] = truth[i];
    }
    const auto ic = InstantiatedChain::at(p, v);
    Rng rng = Rng::for_episode(cfg.seed, e);
    step.trace = run_episode(ic, cfg, rng, e);

    for (const auto& o : map_observations(p, step.trace, clock)) {
      auto it = beliefs.find(o.param);
      if (it != beliefs.end()) it->second = observe(it->second, o);
    }
    clock += static_cast<double>(step.trace.steps.size());

    const auto est = estimate_all(beliefs, p);
    step.warnings = est.warnings;
    std::vector<double> point(p.params.size());
    for (std::size_t i = 0; i < point.size(); ++i) point[i] = est.values.at(p.params.name(ParamId{static_cast<std::uint32_t>(i)}));
    MonitorOptions mo;
    mo.timestamp = clock;
    try {
      step.report = evaluate(monitor, point, mo);
      step.decision = decide(step.report, policy);
    } catch (const InvalidValuation& err) {
      step.report.timestamp = clock;
      step.report.warnings.push_back(std::string("estimates do not form a valid chain: ") + err.what());
      step.decision.rationale = "no evaluation";
    }

    if (auto eff = cfg.interventions.find(step.decision.action); eff != cfg.interventions.end()) {
      std::vector<double> next = truth;
      for (const auto& [name, factor] : eff->second) {
        auto id = p.params.find(name);
        if (!id) throw Error("intervention on unknown parameter '" + name + "'");
        double lo = 0.0, hi = 1.0;
        if (auto b = p.bounds.find(*id); b != p.bounds.end()) {
          lo = to_double(b->second.low);
          hi = to_double(b->second.high);
        }
        next[id->index] = std::clamp(next[id->index] * factor, lo, hi);
      }
      ParamValuation nv;
      for (std::size_t i = 0; i < next.size(); ++i) nv[ParamId{static_cast<std::uint32_t>(i)}] = rational_from_double(next[i]);
      if (validate_valuation(p, nv).empty()) {
        truth = std::move(next);
      } else {
        step.warnings.push_back("intervention for " + to_string(step.decision.action) +
                                " skipped: it would leave the chain invalid");
      }
    }
    out.push_back(std::move(step));
  }
  return out;
}

inline nlohmann::json to_json(const Pdtmc& p, const EpisodeTrace& t) {
  const auto si = *p.variable_index("s");
  nlohmann::json states = nlohmann::json::array();
  states.push_back(p.states[t.start][si]);
  for (const auto& st : t.steps) states.push_back(p.states[st.next][si]);
  return {{"episode", t.episode}, {"states", states},       {"steps", t.steps.size()},
          {"reward", t.reward},   {"cost", t.cost},         {"completionReward", t.completion_reward},
          {"outcome", to_string(t.outcome)}};
}

}  // namespace pdtmc
