#include <gtest/gtest.h>

#include <cmath>

#include "pdtmc/engine/numeric.hpp"
#include "pdtmc/sim/simulator.hpp"
#include "support.hpp"

using namespace pdtmc;

namespace {

const Pdtmc& full_chain() {
  static const Pdtmc p = unfold(support::rad_model(), support::rad_base());
  return p;
}

const Pdtmc& two_param_chain() {
  static const Pdtmc p = unfold(support::rad_model(), support::two_param());
  return p;
}

std::map<std::string, const char*> nominal() {
  return {{"P2", "0.06"}, {"P3", "0.05"}, {"P4", "0.88"}, {"P5", "0.7"}, {"P6", "0.05"},
          {"P7", "0.8"},  {"P8", "0.05"}, {"P9", "0.1"},  {"p10", "0.8"}};
}

SimConfig config(const Pdtmc& p, const std::map<std::string, const char*>& truth, std::uint64_t episodes,
                 std::uint64_t seed) {
  SimConfig cfg;
  cfg.ground_truth = support::exact_valuation(p, truth);
  cfg.episodes = episodes;
  cfg.seed = seed;
  cfg.rewards = RewardScheme::from(p);
  return cfg;
}

/// Waits in s=0 for `wait` steps, then completes.
Pdtmc delayed_completion(int wait) {
  const std::string text = "dtmc const int W; module m s : [0..9] init 0; time_step : [0..5] init 0;"
                           " [] s=0 & time_step<W -> (time_step'=time_step+1);"
                           " [] s=0 & time_step>=W -> (s'=3);"
                           " [] s=3 -> (s'=9);"
                           " [] s>0 & s!=3 -> (s'=s); endmodule";
  Bindings b;
  b["W"] = BigRational(wait);
  return unfold(lang::parse_model(text), b);
}

bool same(const EpisodeTrace& a, const EpisodeTrace& b) {
  if (a.steps.size() != b.steps.size() || a.outcome != b.outcome || a.reward != b.reward || a.cost != b.cost)
    return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i)
    if (a.steps[i].transition != b.steps[i].transition) return false;
  return true;
}

}  // namespace

TEST(Reward, DecayedCompletion) {
  for (int wait : {0, 1, 2, 3}) {
    const Pdtmc p = delayed_completion(wait);
    SimConfig cfg;
    Rng rng(1);
    const auto t = run_episode(InstantiatedChain::at(p, {}), cfg, rng);
    EXPECT_EQ(t.outcome, Outcome::Completed);
    EXPECT_NEAR(t.reward, 20.0 * std::exp(-0.5 * wait), 1e-12) << wait;
    EXPECT_EQ(t.completion_reward, t.reward);
  }
  const Pdtmc p = delayed_completion(2);
  Rng rng(1);
  EXPECT_NEAR(run_episode(InstantiatedChain::at(p, {}), SimConfig{}, rng).reward, 7.358, 1e-3);
}

TEST(Reward, MeanCompletionRewardBounded) {
  const Pdtmc& p = full_chain();
  const auto traces = run_batch(p, config(p, nominal(), 5000, 3));
  double total = 0.0;
  for (const auto& t : traces) {
    EXPECT_LE(t.completion_reward, 20.0);
    total += t.completion_reward;
  }
  EXPECT_LE(total / traces.size(), 20.0);
  EXPECT_GT(total, 0.0);
}

TEST(Episode, TracesAreValidPaths) {
  const Pdtmc& p = full_chain();
  const auto si = *p.variable_index("s");
  for (const auto& t : run_batch(p, config(p, nominal(), 500, 9))) {
    std::size_t cur = t.start;
    ASSERT_EQ(cur, p.initial);
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const auto& st = t.steps[i];
      EXPECT_EQ(st.step, i);
      EXPECT_EQ(st.state, cur);
      EXPECT_EQ(p.transitions[st.transition].source, cur);
      EXPECT_EQ(p.transitions[st.transition].target, st.next);
      cur = st.next;
    }
    ASSERT_NE(t.outcome, Outcome::Truncated);
    EXPECT_EQ(p.states[cur][si], 9);
    const bool completed = p.states[t.steps.back().state][si] == 3;
    EXPECT_EQ(t.outcome == Outcome::Completed, completed);
    const double expected_cost = (t.visits(p, 2) ? 10.0 : 0.0) + (t.visits(p, 8) ? 5.0 : 0.0);
    EXPECT_EQ(t.cost, expected_cost);
  }
}

TEST(Episode, Truncation) {
  const Pdtmc& p = full_chain();
  auto cfg = config(p, nominal(), 50, 4);
  cfg.max_steps_per_episode = 1;
  for (const auto& t : run_batch(p, cfg)) {
    EXPECT_EQ(t.steps.size(), 1u);
    EXPECT_EQ(t.outcome, Outcome::Truncated);
  }
}

TEST(Episode, NoTimelyDetectionMeansEscalation) {
  const Pdtmc& p = two_param_chain();
  const auto traces = run_batch(p, config(p, {{"P2", "0"}, {"P3", "0.05"}}, 100000, 11));
  std::size_t hits = 0;
  for (const auto& t : traces) hits += t.visits(p, 2);
  EXPECT_NEAR(static_cast<double>(hits) / traces.size(), 0.99, 0.01);
}

TEST(Episode, VisitFrequenciesMatchAbsorbingChain) {
  const Pdtmc& p = full_chain();
  const auto cfg = config(p, nominal(), 20000, 21);
  const auto traces = run_batch(p, cfg);
  StateSet abort_states(p.state_count(), false);
  for (std::size_t s : p.labels.at("s=9")) abort_states[s] = true;
  const Pdtmc episodic = make_absorbing(p, abort_states);
  for (int s : {2, 3, 7, 8}) {
    std::size_t hits = 0;
    for (const auto& t : traces) hits += t.visits(p, s);
    const auto target = states_satisfying(episodic, lang::parse_expression("s=" + std::to_string(s)));
    const double want = numeric_reach(episodic, cfg.ground_truth, target);
    const double got = static_cast<double>(hits) / traces.size();
    const double se = std::sqrt(want * (1 - want) / traces.size());
    EXPECT_LE(std::abs(got - want), 3 * se + 1e-12) << "s=" << s << " want " << want << " got " << got;
  }
}

TEST(Episode, SeededDeterminism) {
  const Pdtmc& p = full_chain();
  const auto a = run_batch(p, config(p, nominal(), 300, 5));
  const auto b = run_batch(p, config(p, nominal(), 300, 5));
  const auto c = run_batch(p, config(p, nominal(), 300, 6));
  ASSERT_EQ(a.size(), b.size());
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(same(a[i], b[i])) << i;
    differ = differ || !same(a[i], c[i]);
  }
  EXPECT_TRUE(differ);
}

TEST(Episode, StreamsIndependentOfBatchSize) {
  const Pdtmc& p = full_chain();
  const auto small = run_batch(p, config(p, nominal(), 10, 8));
  const auto large = run_batch(p, config(p, nominal(), 100, 8));
  for (std::size_t i = 0; i < small.size(); ++i) EXPECT_TRUE(same(small[i], large[i])) << i;
}

TEST(Observations, StepMapping) {
  auto o = observations_for_step(5, 7, 3.0);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0].param, "P8");
  EXPECT_EQ(o[0].outcome, 0);
  EXPECT_EQ(o[0].time, 3.0);
  EXPECT_TRUE(observations_for_step(2, 8, 0.0).empty());
  EXPECT_TRUE(observations_for_step(3, 9, 0.0).empty());

  o = observations_for_step(0, 1, 0.0);
  ASSERT_EQ(o.size(), 2u);
  EXPECT_EQ(o[0].param, "P2");
  EXPECT_EQ(o[0].outcome, 1);
  EXPECT_EQ(o[1].param, "P9");
  EXPECT_EQ(o[1].outcome, 0);
  // s0 -> s3 is the timeout command, which carries no branch information.
  EXPECT_TRUE(observations_for_step(0, 3, 0.0).empty());

  o = observations_for_step(1, 4, 0.0);
  ASSERT_EQ(o.size(), 2u);
  EXPECT_EQ(o[0].param, "P3");
  EXPECT_EQ(o[0].outcome, 0);
  EXPECT_EQ(o[1].outcome, 1);

  o = observations_for_step(4, 6, 0.0);
  ASSERT_EQ(o.size(), 2u);
  EXPECT_EQ(o[0].outcome, 0);
  EXPECT_EQ(o[1].param, "P6");
  EXPECT_EQ(o[1].outcome, 1);

  o = observations_for_step(6, 7, 0.0);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0].param, "P7");
  EXPECT_EQ(o[0].outcome, 1);
  EXPECT_TRUE(observations_for_step(6, 8, 0.0).empty());

  o = observations_for_step(9, 9, 0.0);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0].param, "p10");
}

TEST(Observations, GlobalTimes) {
  const Pdtmc& p = full_chain();
  const auto traces = run_batch(p, config(p, nominal(), 20, 2));
  for (const auto& t : traces) {
    const auto obs = map_observations(p, t, 100.0);
    for (const auto& o : obs) {
      EXPECT_GE(o.time, 100.0);
      EXPECT_LT(o.time, 100.0 + static_cast<double>(t.steps.size()));
    }
  }
}

TEST(Observations, RecoveryProbabilityLearned) {
  // At the nominal point s=6 is rarely entered, so route more mass there.
  const Pdtmc& p = full_chain();
  auto truth = nominal();
  truth["P2"] = "0.5";
  truth["P5"] = "0.4";
  truth["P6"] = "0.5";
  const auto traces = run_batch(p, config(p, truth, 10000, 13));
  auto b = BeliefState::make("P7", 0.5, 1.0, 1.0);
  double clock = 0.0;
  for (const auto& t : traces) {
    for (const auto& o : map_observations(p, t, clock))
      if (o.param == "P7") b = observe(b, o);
    clock += static_cast<double>(t.steps.size());
  }
  EXPECT_GT(b.count, 0u);
  EXPECT_NEAR(estimate(b), 0.8, 0.02) << b.count << " observations";
}

TEST(Observations, EveryBranchRecovered) {
  // Ground truth chosen so that every branch state is visited often. The
  // episode stops at s=9, so p10 is never observed.
  const Pdtmc& p = full_chain();
  const std::map<std::string, const char*> truth{{"P2", "0.5"}, {"P3", "0.2"}, {"P4", "0.6"}, {"P5", "0.4"},
                                                 {"P6", "0.4"}, {"P7", "0.8"}, {"P8", "0.3"}, {"P9", "0.2"},
                                                 {"p10", "0.5"}};
  const auto traces = run_batch(p, config(p, truth, 10000, 17));
  BeliefSet beliefs;
  for (const auto& [name, value] : truth) beliefs.emplace(name, BeliefState::make(name, 0.5, 1.0, 1.0));
  double clock = 0.0;
  for (const auto& t : traces) {
    for (const auto& o : map_observations(p, t, clock)) beliefs.at(o.param) = observe(beliefs.at(o.param), o);
    clock += static_cast<double>(t.steps.size());
  }
  EXPECT_EQ(beliefs.at("p10").count, 0u);
  for (const auto& [name, value] : truth) {
    if (name == "p10") continue;
    const auto& b = beliefs.at(name);
    EXPECT_GE(b.count, 1000u) << name;
    EXPECT_NEAR(estimate(b), std::stod(value), 0.02) << name;
  }
}

namespace {

struct LoopFixture {
  const Pdtmc& p = two_param_chain();
  MonitorCache cache = precompute(p, dressing_requirements(p), support::rad_text());

  BeliefSet priors(double p2, double p3) const {
    return {{"P2", BeliefState::make("P2", p2, 10.0, 1.05)}, {"P3", BeliefState::make("P3", p3, 10.0, 1.05)}};
  }
};

const LoopFixture& loop() {
  static const LoopFixture f;
  return f;
}

}  // namespace

TEST(ClosedLoop, NoInterventionsEqualsOpenLoop) {
  const auto& f = loop();
  const auto cfg = config(f.p, {{"P2", "0.3"}, {"P3", "0.05"}}, 60, 12);
  auto beliefs = f.priors(0.3, 0.05);
  const auto steps = run_closed_loop(f.p, cfg, beliefs, f.cache);
  const auto open = run_batch(f.p, cfg);
  ASSERT_EQ(steps.size(), open.size());
  for (std::size_t i = 0; i < open.size(); ++i) EXPECT_TRUE(same(steps[i].trace, open[i])) << i;
}

TEST(ClosedLoop, DeterministicDecisions) {
  const auto& f = loop();
  auto cfg = config(f.p, {{"P2", "0.06"}, {"P3", "0.05"}}, 40, 99);
  cfg.interventions[Action::CompliantMode]["P2"] = 1.5;
  auto b1 = f.priors(0.3, 0.05), b2 = f.priors(0.3, 0.05);
  const auto a = run_closed_loop(f.p, cfg, b1, f.cache);
  const auto b = run_closed_loop(f.p, cfg, b2, f.cache);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(same(a[i].trace, b[i].trace)) << i;
    EXPECT_EQ(a[i].decision.action, b[i].decision.action) << i;
    EXPECT_EQ(a[i].ground_truth, b[i].ground_truth) << i;
  }
  EXPECT_EQ(b1.at("P2").aged_sum, b2.at("P2").aged_sum);
}

TEST(ClosedLoop, InterventionChangesLaterEpisodes) {
  const auto& f = loop();
  auto cfg = config(f.p, {{"P2", "0.06"}, {"P3", "0.05"}}, 50, 7);
  cfg.interventions[Action::CompliantMode]["P2"] = 2.0;
  auto beliefs = f.priors(0.06, 0.05);
  const auto steps = run_closed_loop(f.p, cfg, beliefs, f.cache, DecisionPolicy::escalation_only());
  ASSERT_FALSE(steps.empty());
  EXPECT_EQ(steps[0].decision.action, Action::CompliantMode);
  EXPECT_NEAR(steps[1].ground_truth.at("P2"), 0.12, 1e-12);
  for (std::size_t i = 1; i < steps.size(); ++i) {
    EXPECT_GE(steps[i].ground_truth.at("P2"), steps[i - 1].ground_truth.at("P2"));
    EXPECT_LE(steps[i].ground_truth.at("P2"), 0.9 + 1e-12);
  }
}
