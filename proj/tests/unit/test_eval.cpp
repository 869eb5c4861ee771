#include <gtest/gtest.h>

#include <cmath>

#include "eplab/eval/bootstrap.hpp"
#include "eplab/eval/experiments.hpp"
#include "eplab/eval/metrics.hpp"
#include "support/oracles.hpp"
#include "support/policies.hpp"

using namespace eplab;
using namespace eplab::eval;

namespace {

std::vector<double> bernoulli(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.bernoulli(p) ? 1.0 : 0.0;
  return v;
}

agents::QTable trained_single(deliberation::Semantics sem, int episodes = 8000) {
  agents::QLearningConfig q;
  q.training_episodes = episodes;
  q.sample_average = true;
  return train_deliberation(deliberation::DeliberationConfig::single_task(), false, sem, q);
}

}  // namespace

TEST(Percentile, LinearInterpolation) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(percentile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(percentile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile(v, 0.25), 1.75);
  EXPECT_THROW(percentile(std::vector<double>{}, 0.5), std::invalid_argument);
}

TEST(Bootstrap, ConstantSample) {
  const std::vector<double> v{5, 5, 5, 5};
  EXPECT_EQ(bootstrap_ci(v, StatKind::mean), (Estimate{5.0, 0.0}));
  const std::vector<double> pairs{1, 1, 1, 1, 1, 1, 1, 1};
  EXPECT_EQ(bootstrap_ci(pairs, StatKind::rate_from_counts), (Estimate{1.0, 0.0}));
}

TEST(Bootstrap, TwoPointSampleMatchesEnumeration) {
  const std::vector<double> v{0, 1};
  const auto e = bootstrap_ci(v, StatKind::mean);
  EXPECT_DOUBLE_EQ(e.point, 0.5);
  // Resample means are 0, 0.5, 0.5, 1 with equal weight; both 2.5% tails sit on the extremes.
  const auto all = oracle::enumerate_rate_resamples({0, 1}, {1, 1});
  EXPECT_EQ(all, (oracle::Vec{0.0, 0.5, 0.5, 1.0}));
  EXPECT_DOUBLE_EQ(e.half_width, (all.back() - all.front()) / 2.0);
}

TEST(Bootstrap, RateUsesAggregateCounts) {
  // Per-episode ratios average to 0.5; pooled counts give 2/11.
  const std::vector<double> num{1, 1}, den{1, 10};
  EXPECT_DOUBLE_EQ(bootstrap_rate(num, den).point, 2.0 / 11.0);
  EXPECT_DOUBLE_EQ(bootstrap_rate(std::vector<double>{0}, std::vector<double>{0}).point, 0.0);
}

TEST(Bootstrap, HalfWidthShrinksLikeRootN) {
  const auto small = bootstrap_mean(bernoulli(100, 0.3, 7));
  const auto large = bootstrap_mean(bernoulli(400, 0.3, 8));
  const double ratio = small.half_width / large.half_width;
  EXPECT_GT(ratio, 2.0 / 1.5);
  EXPECT_LT(ratio, 2.0 * 1.5);
}

TEST(Bootstrap, DeterministicUnderSeed) {
  const auto v = bernoulli(200, 0.4, 1);
  EXPECT_EQ(bootstrap_mean(v), bootstrap_mean(v));
  BootstrapConfig other;
  other.seed = 7;
  EXPECT_NE(bootstrap_mean(v).half_width, bootstrap_mean(v, other).half_width);
}

TEST(Bootstrap, Errors) {
  EXPECT_THROW(bootstrap_mean(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(bootstrap_ci(std::vector<double>{1, 2, 3}, StatKind::rate_from_counts), std::invalid_argument);
  BootstrapConfig bad;
  bad.resamples = 0;
  EXPECT_THROW(bootstrap_mean(std::vector<double>{1}, bad), std::invalid_argument);
}

TEST(Metrics, CsvRoundTrip) {
  std::vector<EpisodeSummary> eps;
  for (int i = 0; i < 20; ++i) {
    eps.push_back({static_cast<std::uint64_t>(i), 0.1 * i - 0.7, {},
                   {{"tasks", 1}, {"successes", i % 3 == 0}, {"failures", i % 3 == 1}, {"timeouts", i % 3 == 2},
                    {"decisions", 1}, {"mode" + std::to_string(1 + i % 5), 1}}});
  }
  const std::vector<MetricsRow> rows{compute_metrics(EnvKind::deliberation, "deliberation-single/EP", "EP -> EP", eps),
                                     compute_metrics(EnvKind::deliberation, "deliberation-single/EP", "Step -> EP", eps)};
  const auto back = from_csv(to_csv(rows));
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(back[r].env, rows[r].env);
    EXPECT_EQ(back[r].method, rows[r].method);
    EXPECT_EQ(back[r].n, 20);
    ASSERT_EQ(back[r].metrics.size(), rows[r].metrics.size());
    for (std::size_t k = 0; k < rows[r].metrics.size(); ++k) {
      EXPECT_EQ(back[r].metrics[k].key, rows[r].metrics[k].key);
      EXPECT_NEAR(back[r].metrics[k].value.point, rows[r].metrics[k].value.point, 1e-9);
      EXPECT_NEAR(back[r].metrics[k].value.half_width, rows[r].metrics[k].value.half_width, 1e-9);
    }
  }
  const auto& r0 = rows[0];
  EXPECT_NEAR(r0["success_rate"] + r0["failure_rate"] + r0["timeout_rate"], 1.0, 1e-12);
  EXPECT_THROW(from_csv("a,b\n"), std::invalid_argument);
}

TEST(ModeDistribution, ConstantPolicy) {
  const auto env = deliberation::make_sequential_env(deliberation::DeliberationConfig::sequential(),
                                                     deliberation::Semantics::step);
  testing_policies::MenuIndex first{0};
  std::vector<EpisodeTrace> traces;
  for (std::uint64_t s = 0; s < 50; ++s) traces.push_back(run_episode(env, first, FullHistoryExtractor{}, s, {false}));
  const auto t = mode_distribution_by_urgency(std::span<const EpisodeTrace>(traces));
  for (const auto& row : t) {
    if (row[0] == 0.0) continue;
    EXPECT_EQ(row, (std::array<double, 5>{1, 0, 0, 0, 0}));
  }
}

TEST(ModeDistribution, UniformPolicyIsFlat) {
  // Single-task urgency is uniform over the five buckets: about 10000 decisions per row.
  const auto env = deliberation::make_single_task_env(deliberation::DeliberationConfig::single_task(),
                                                      deliberation::Semantics::step);
  testing_policies::UniformMenu uniform;
  std::vector<EpisodeSummary> eps;
  for (std::uint64_t s = 0; s < 50000; ++s) eps.push_back(summarize(run_episode(env, uniform, FullHistoryExtractor{}, s, {false})));
  const auto t = mode_distribution_by_urgency(std::span<const EpisodeSummary>(eps));
  for (const auto& row : t) {
    double sum = 0.0;
    for (double c : row) {
      EXPECT_NEAR(c, 0.2, 0.02);
      sum += c;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(ModeDistribution, EpPolicyAvoidsDeepModesWhenTight) {
  const auto table = trained_single(deliberation::Semantics::ep);
  const auto eps = run_deliberation(deliberation::DeliberationConfig::single_task(), false,
                                    deliberation::Semantics::ep, table, 2000, 42, 1);
  const auto t = mode_distribution_by_urgency(std::span<const EpisodeSummary>(eps));
  EXPECT_LT(t[0][4], t[4][4]);
}

TEST(CrossEval, AlphabetMismatch) {
  const agents::QTable table(deliberation::Learning::kActions);
  EXPECT_THROW(cross_eval(table, "deliberation-single/EP", "patrol-module/EP", 5, 1), AlphabetMismatch);
  agents::QTable wrong(2);
  wrong.row({0, 0});
  EXPECT_THROW(cross_eval(wrong, "deliberation-single/EP", "deliberation-single/Step", 5, 1), AlphabetMismatch);
  agents::QTable long_key(deliberation::Learning::kActions);
  long_key.row({0, 0, 0});
  EXPECT_THROW(cross_eval(long_key, "deliberation-single/EP", "deliberation-single/EP", 5, 1), AlphabetMismatch);
}

TEST(CrossEval, StepEvaluationNeverTimesOut) {
  const auto table = trained_single(deliberation::Semantics::ep, 2000);
  const auto row = cross_eval(table, "deliberation-single/EP", "deliberation-single/Step", 500, 3);
  EXPECT_EQ(row.method, "EP -> Step");
  EXPECT_DOUBLE_EQ(row["timeout_rate"], 0.0);
  EXPECT_EQ(row.n, 500);
}

TEST(CrossEval, SameSettingEqualsPlainEval) {
  const auto table = trained_single(deliberation::Semantics::ep, 2000);
  const auto row = cross_eval(table, "deliberation-single/EP", "deliberation-single/EP", 300, 5);
  const auto eps = run_deliberation(deliberation::DeliberationConfig::single_task(), false,
                                    deliberation::Semantics::ep, table, 300, 5, 2);
  const auto plain = compute_metrics(EnvKind::deliberation, "deliberation-single/EP", "EP -> EP", eps);
  ASSERT_EQ(row.metrics.size(), plain.metrics.size());
  for (std::size_t k = 0; k < row.metrics.size(); ++k) {
    EXPECT_EQ(row.metrics[k].key, plain.metrics[k].key);
    EXPECT_EQ(row.metrics[k].value, plain.metrics[k].value) << row.metrics[k].key;
  }
}
