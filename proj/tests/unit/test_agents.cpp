#include <gtest/gtest.h>

#include <sstream>

#include "eplab/agents/patch.hpp"
#include "eplab/agents/qlearning.hpp"
#include "eplab/envs/deliberation.hpp"
#include "eplab/envs/patrol.hpp"

using namespace eplab;
using namespace eplab::agents;
using patrol::Mode;
using patrol::PhaseKind;
using patrol::View;

namespace {

View handling(int phase, int remaining, int duration, int deadline, patrol::Cell pos = {0, 0},
              patrol::Cell alarm = {1, 0}) {
  View v;
  v.mode = Mode::handling;
  v.phase = phase;
  v.phase_remaining = remaining;
  v.phase_duration = duration;
  v.alarm = true;
  v.deadline = deadline;
  v.pos = pos;
  v.alarm_pos = alarm;
  return v;
}

const auto d2 = patrol::PatrolConfig::state_level(2).phases;
const auto d3 = patrol::PatrolConfig::state_level(3).phases;

}  // namespace

TEST(QUpdate, Examples) {
  QTable q(2);
  EXPECT_DOUBLE_EQ(q_update(q, {0}, 0, 1.0, {1}, false, 0.5, 0.9), 0.5);

  QTable q2(2);
  q2.row({0})[1] = 3.0;
  q2.row({1}) = {7.0, 9.0};
  EXPECT_DOUBLE_EQ(q_update(q2, {0}, 1, -2.0, {1}, true, 1.0, 0.9), -2.0);

  QTable q3(2);
  q3.row({0})[0] = 1.0;
  q3.row({1}) = {2.0, -1.0};
  EXPECT_NEAR(q_update(q3, {0}, 0, 0.0, {1}, false, 0.1, 0.9), 1.08, 1e-12);
}

TEST(QTable, UnvisitedKeysReadZeroAndRoundTrip) {
  QTable q(3);
  EXPECT_DOUBLE_EQ(q.get({4, 2}, 1), 0.0);
  q.row({1, -2}) = {0.5, -1.25, 1e-17};
  q.row({0, 0}) = {3.0, 0.0, 2.0 / 3.0};
  EXPECT_EQ(QTable::from_string(q.to_string()), q);
  EXPECT_THROW(QTable::from_string("qtable 3 1\n1,2 : 0.5\n"), std::runtime_error);
}

TEST(Epsilon, LinearScheduleThenFlat) {
  QLearningConfig cfg;
  cfg.training_episodes = 1000;
  EXPECT_EQ(cfg.decay_episodes(), 800);
  EXPECT_DOUBLE_EQ(epsilon_at(0, cfg), 1.0);
  EXPECT_NEAR(epsilon_at(400, cfg), 0.525, 1e-12);
  EXPECT_DOUBLE_EQ(epsilon_at(800, cfg), 0.05);
  EXPECT_DOUBLE_EQ(epsilon_at(999, cfg), 0.05);
  for (int e = 1; e < 800; ++e) EXPECT_LT(epsilon_at(e, cfg), epsilon_at(e - 1, cfg));
}

TEST(Train, ZeroEpisodesGivesEmptyTable) {
  const auto env = deliberation::make_single_task_env({}, deliberation::Semantics::ep);
  QLearningConfig cfg;
  cfg.training_episodes = 0;
  const auto q = train<deliberation::Learning>(env, deliberation::Extractor{}, DecisionGate::every_tick, cfg);
  EXPECT_TRUE(q.empty());
}

TEST(Train, SameSeedSameBytes) {
  const auto env = deliberation::make_single_task_env({}, deliberation::Semantics::ep);
  QLearningConfig cfg;
  cfg.training_episodes = 500;
  const auto a = train<deliberation::Learning>(env, deliberation::Extractor{}, DecisionGate::every_tick, cfg);
  const auto b = train<deliberation::Learning>(env, deliberation::Extractor{}, DecisionGate::every_tick, cfg);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a.to_string(), b.to_string());
  cfg.seed = 43;
  const auto c = train<deliberation::Learning>(env, deliberation::Extractor{}, DecisionGate::every_tick, cfg);
  EXPECT_NE(a.to_string(), c.to_string());
}

TEST(Train, LearnsToAvoidModesLongerThanSlack) {
  const auto dc = deliberation::DeliberationConfig::single_task();
  const auto env = deliberation::make_single_task_env(dc, deliberation::Semantics::ep);
  QLearningConfig cfg;
  cfg.training_episodes = 8000;
  cfg.sample_average = true;
  cfg.gamma = env.gamma_tick;
  cfg.decision_gamma = dc.gamma_task;
  const auto q = train<deliberation::Learning>(env, deliberation::Extractor{}, DecisionGate::every_tick, cfg);
  // Single-task slack is one of the five choices, so each urgency bucket holds one slack value.
  for (const auto& [key, row] : q.rows()) {
    const double slack = dc.slack_choices_s[static_cast<std::size_t>(key[0])];
    const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    EXPECT_LE(dc.mode_durations_s[static_cast<std::size_t>(best)], slack) << key[0] << "," << key[1];
  }
}

TEST(Patch, RuleTable) {
  EXPECT_EQ(patch_policy(handling(1, 5, 10, 6), 2, d2), PatrolDecision::respond);
  EXPECT_EQ(patch_policy(handling(1, 5, 10, 7), 2, d2), PatrolDecision::keep_going);
  EXPECT_EQ(patch_policy(handling(0, 2, 4, 20), 2, d2), PatrolDecision::respond);
  EXPECT_EQ(patch_policy(handling(0, 2, 3, 20), 3, d3), PatrolDecision::respond);
  EXPECT_EQ(patch_policy(handling(1, 2, 5, 8), 3, d3), PatrolDecision::respond);
  EXPECT_EQ(patch_policy(handling(1, 2, 5, 9), 3, d3), PatrolDecision::keep_going);
  EXPECT_EQ(patch_policy(handling(2, 5, 10, 2), 3, d3), PatrolDecision::keep_going);

  View nav = handling(0, 0, 0, 20);
  nav.mode = Mode::patrol_nav;
  EXPECT_EQ(patch_policy(nav, 2, d2), PatrolDecision::respond);
  View none = handling(1, 5, 10, 6);
  none.alarm = false;
  EXPECT_EQ(patch_policy(none, 2, d2), PatrolDecision::keep_going);
}

TEST(PatchPro, DefaultThresholds) {
  const auto t = PatchProThresholds::defaults();
  EXPECT_EQ(t.very_urgent_ticks, 3);
  EXPECT_DOUBLE_EQ(t.net_alarm_value, 45.0);
  const auto& c2 = t.table.at({2, PhaseKind::commit});
  EXPECT_EQ(c2.urgency_ticks, 8);
  EXPECT_DOUBLE_EQ(c2.progress_cutoff, 0.5);
  EXPECT_DOUBLE_EQ(c2.cost_ratio, 3.5);
  const auto& v3 = t.table.at({3, PhaseKind::verify});
  EXPECT_EQ(v3.urgency_ticks, 12);
  EXPECT_DOUBLE_EQ(v3.progress_cutoff, 0.8);
  EXPECT_DOUBLE_EQ(v3.cost_ratio, 3.0);
  EXPECT_EQ(t.table.at({3, PhaseKind::observe}).urgency_ticks, 18);
  EXPECT_EQ(t.table.at({2, PhaseKind::observe}).urgency_ticks, 16);
  EXPECT_DOUBLE_EQ(t.table.at({3, PhaseKind::commit}).cost_ratio, 4.5);
}

TEST(PatchPro, OrderedChecks) {
  const auto thr = PatchProThresholds::defaults();
  // Unreachable: 10 + 2 > 9.
  EXPECT_EQ(patchpro_policy(handling(0, 2, 4, 9, {0, 0}, {5, 5}), 2, d2, 2, thr), PatrolDecision::keep_going);
  // Very urgent and reachable responds even late in commit.
  EXPECT_EQ(patchpro_policy(handling(1, 9, 10, 3, {0, 0}, {1, 0}), 2, d2, 2, thr), PatrolDecision::respond);
  // Patrol navigation responds whenever reachable.
  View nav = handling(0, 0, 0, 20, {0, 0}, {5, 5});
  nav.mode = Mode::patrol_nav;
  EXPECT_EQ(patchpro_policy(nav, 2, d2, 2, thr), PatrolDecision::respond);
  // Finish-first: 2 + 3 + 2 <= 8.
  EXPECT_EQ(patchpro_policy(handling(1, 2, 10, 8, {0, 0}, {3, 0}), 2, d2, 2, thr), PatrolDecision::keep_going);
  // Commit, deadline 8, progress 0.2, 45 >= 17.5: respond.
  EXPECT_EQ(patchpro_policy(handling(1, 8, 10, 8, {0, 0}, {3, 0}), 2, d2, 2, thr), PatrolDecision::respond);
  // Same but progress 0.6 >= 0.5: keep going.
  EXPECT_EQ(patchpro_policy(handling(1, 4, 10, 8, {0, 0}, {3, 0}), 2, d2, 2, thr), PatrolDecision::keep_going);
  // Deadline 9 exceeds the commit urgency threshold of 8.
  EXPECT_EQ(patchpro_policy(handling(1, 8, 10, 9, {0, 0}, {3, 0}), 2, d2, 2, thr), PatrolDecision::keep_going);
  // Cost check fails when the ratio is raised past 45 / 5.
  auto strict = thr;
  strict.table[{2, PhaseKind::commit}].cost_ratio = 9.5;
  EXPECT_EQ(patchpro_policy(handling(1, 8, 10, 8, {0, 0}, {3, 0}), 2, d2, 2, strict), PatrolDecision::keep_going);
}
