#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "eplab/core/process.hpp"
#include "eplab/envs/deliberation.hpp"
#include "support/policies.hpp"

using namespace eplab;
using namespace eplab::deliberation;

namespace {

struct Drive {
  double total = 0.0;
  int ticks = 0;
};

// Steps from `s` until terminal, applying `pick(s)` whenever a decision is due.
Drive drive(const ProcessSpec<DeliberationState>& env, DeliberationState& s, std::uint64_t seed,
            const std::function<int(const DeliberationState&)>& pick) {
  Streams streams(seed);
  Drive d;
  while (!env.terminal(s) && d.ticks < env.horizon) {
    const InterventionSet a = s.awaiting_decision() ? InterventionSet::single(pick(s) - 1) : InterventionSet{};
    auto r = step(env, s, a, streams, d.ticks);
    d.total += utility_sum(r.utilities);
    s = std::move(r.next);
    ++d.ticks;
  }
  return d;
}

DeliberationState one_task(Semantics sem, double deadline, double difficulty) {
  DeliberationState s;
  s.semantics = sem;
  s.tasks = {{deadline, difficulty}};
  return s;
}

}  // namespace

TEST(SuccessProb, Examples) {
  const auto cfg = DeliberationConfig::single_task();
  EXPECT_DOUBLE_EQ(success_prob(1, 0.0, cfg), 0.5);
  EXPECT_NEAR(success_prob(1, 0.0, cfg), 1.0 / (1.0 + std::exp(0.0)), 1e-15);
  EXPECT_NEAR(success_prob(5, 1.0, cfg), 1.0 / (1.0 + std::exp(0.3)), 1e-12);
  EXPECT_NEAR(success_prob(3, 0.4, cfg), 1.0 / (1.0 + std::exp(-0.2)), 1e-12);
}

TEST(SuccessProb, MonotoneInModeAndDifficulty) {
  const auto cfg = DeliberationConfig::single_task();
  for (int i = 0; i <= 20; ++i) {
    const double u = i / 20.0;
    for (int m = 2; m <= kModes; ++m) EXPECT_GT(success_prob(m, u, cfg), success_prob(m - 1, u, cfg));
    if (i > 0) {
      for (int m = 1; m <= kModes; ++m) EXPECT_LT(success_prob(m, u, cfg), success_prob(m, u - 0.05, cfg));
    }
  }
}

TEST(SuccessProb, RejectsBadArguments) {
  const auto cfg = DeliberationConfig::single_task();
  EXPECT_THROW(success_prob(0, 0.5, cfg), std::out_of_range);
  EXPECT_THROW(success_prob(6, 0.5, cfg), std::out_of_range);
  EXPECT_THROW(success_prob(1, 1.5, cfg), std::invalid_argument);
  EXPECT_THROW(success_prob(1, -0.1, cfg), std::invalid_argument);
}

TEST(Deliberation, ConfigValidation) {
  auto cfg = DeliberationConfig::single_task();
  cfg.mode_durations_s[2] = cfg.mode_durations_s[1];
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = DeliberationConfig::single_task();
  cfg.mode_alphas[4] = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_THROW(make_sequential_env(DeliberationConfig::single_task(), Semantics::ep), std::invalid_argument);
  EXPECT_THROW(make_single_task_env(DeliberationConfig::sequential(), Semantics::ep), std::invalid_argument);
}

TEST(Deliberation, PendingCountdownIsSilent) {
  const auto env = make_single_task_env(DeliberationConfig::single_task(), Semantics::ep);
  auto s = one_task(Semantics::ep, 8.0, 0.5);
  s.pending = Pending{5, 50};
  Streams streams(3);
  const auto r = step(env, s, InterventionSet{}, streams, 0);
  ASSERT_TRUE(r.next.pending.has_value());
  EXPECT_EQ(r.next.pending->remaining, 49);
  EXPECT_TRUE(r.observations.empty());
  EXPECT_TRUE(r.utilities.empty());
}

TEST(Deliberation, DecisionRequiredOnlyWhenPresented) {
  const auto env = make_single_task_env(DeliberationConfig::single_task(), Semantics::ep);
  auto s = one_task(Semantics::ep, 8.0, 0.5);
  Streams streams(1);
  EXPECT_THROW(step(env, s, InterventionSet{}, streams, 0), InadmissibleIntervention);
  s.pending = Pending{2, 4};
  EXPECT_THROW(step(env, s, InterventionSet::single(0), streams, 0), InadmissibleIntervention);
}

TEST(Deliberation, EpTightSlackDeepModeTimesOut) {
  const auto env = make_single_task_env(DeliberationConfig::single_task(), Semantics::ep);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = one_task(Semantics::ep, 0.3, 0.2);
    const auto d = drive(env, s, seed, [](const DeliberationState&) { return 5; });
    EXPECT_EQ(s.timeouts, 1);
    EXPECT_DOUBLE_EQ(d.total, -2.0);
  }
}

TEST(Deliberation, StepNeverTimesOut) {
  const auto env = make_single_task_env(DeliberationConfig::single_task(), Semantics::step);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = one_task(Semantics::step, 0.3, 0.2);
    drive(env, s, seed, [](const DeliberationState&) { return 5; });
    EXPECT_EQ(s.timeouts, 0);
    EXPECT_EQ(s.successes + s.failures, 1);
    EXPECT_EQ(s.clock_ticks, 0);
  }
}

TEST(Deliberation, EpAmpleSlackResolves) {
  const auto env = make_single_task_env(DeliberationConfig::single_task(), Semantics::ep);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = one_task(Semantics::ep, 8.0, 0.9);
    const auto d = drive(env, s, seed, [](const DeliberationState&) { return 1; });
    EXPECT_EQ(s.timeouts, 0);
    EXPECT_EQ(s.successes + s.failures, 1);
    EXPECT_TRUE(d.total == 4.0 || d.total == -2.0);
  }
}

TEST(Deliberation, SequentialTightGapsExpireBacklog) {
  auto cfg = DeliberationConfig::sequential();
  cfg.deadline_gaps_s.fill(0.4);
  const auto env = make_sequential_env(cfg, Semantics::ep);
  Streams init(9);
  auto s = env.initial(init);
  const auto d = drive(env, s, 9, [](const DeliberationState&) { return 5; });
  // The first task runs 5 s; every later deadline (at most 4 s) has passed by then.
  EXPECT_EQ(s.timeouts, 10);
  EXPECT_EQ(s.decisions, 1);
  EXPECT_DOUBLE_EQ(d.total, -20.0);
}

TEST(Deliberation, SequentialWideGapsFastModeNeverTimesOut) {
  auto cfg = DeliberationConfig::sequential();
  cfg.deadline_gaps_s.fill(5.5);
  const auto env = make_sequential_env(cfg, Semantics::ep);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Streams init(seed);
    auto s = env.initial(init);
    drive(env, s, seed, [](const DeliberationState&) { return 1; });
    EXPECT_EQ(s.timeouts, 0);
    EXPECT_EQ(s.successes + s.failures, 10);
  }
}

TEST(Deliberation, ReturnMatchesOutcomeCounts) {
  for (auto sem : {Semantics::ep, Semantics::step}) {
    const auto env = make_sequential_env(DeliberationConfig::sequential(), sem);
    testing_policies::UniformMenu policy;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto trace = run_episode(env, policy, FullHistoryExtractor{}, seed, RunOptions{false});
      const int succ = trace.counters.at("successes");
      const int fail = trace.counters.at("failures");
      const int tout = trace.counters.at("timeouts");
      EXPECT_EQ(succ + fail + tout, 10);
      EXPECT_DOUBLE_EQ(trace.total_return, 4.0 * succ - 2.0 * (fail + tout));
      EXPECT_LT(trace.length, env.horizon);
      if (sem == Semantics::step) EXPECT_EQ(tout, 0);
    }
  }
}

TEST(Deliberation, GammaTick) {
  const auto cfg = DeliberationConfig::single_task();
  const auto ep = make_single_task_env(cfg, Semantics::ep);
  EXPECT_NEAR(std::pow(ep.gamma_tick, cfg.ticks_per_second), cfg.gamma_second, 1e-12);
  EXPECT_DOUBLE_EQ(make_single_task_env(cfg, Semantics::step).gamma_tick, 1.0);
}

TEST(Deliberation, UrgencyAndDifficultyBuckets) {
  const auto cfg = DeliberationConfig::single_task();
  EXPECT_EQ(urgency_bucket(0.3, cfg), 0);
  EXPECT_EQ(urgency_bucket(1.0, cfg), 1);
  EXPECT_EQ(urgency_bucket(2.0, cfg), 2);
  EXPECT_EQ(urgency_bucket(4.0, cfg), 3);
  EXPECT_EQ(urgency_bucket(8.0, cfg), 4);
  EXPECT_EQ(difficulty_bin(0.1, cfg), 0);
  EXPECT_EQ(difficulty_bin(0.5, cfg), 1);
  EXPECT_EQ(difficulty_bin(0.9, cfg), 2);
}

TEST(Deliberation, ExtractorKeyIgnoresRawDifficulty) {
  ObservationSet y;
  y.emit(kTaskEvent, 0, {0.0, 2.0, 1.0, 1.7});
  const auto w = Extractor{}.start(y);
  EXPECT_TRUE(w.has_task);
  EXPECT_EQ(Learning::key(w), (std::vector<int>{2, 1}));
}
