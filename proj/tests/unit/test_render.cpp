#include <gtest/gtest.h>

#include <sstream>

#include "eplab/envs/patrol.hpp"
#include "eplab/render/trace_render.hpp"
#include "support/policies.hpp"

using namespace eplab;
using namespace eplab::render;

namespace {

struct Eager {
  DecisionGate gate() const { return DecisionGate::every_tick; }
  template <class Info>
  InterventionSet decide(const Info&, std::span<const InterventionSet> menu, Tick, Rng&) const {
    for (const auto& m : menu) {
      if (m.contains_id(patrol::kRespond)) return m;
    }
    return {};
  }
};

EpisodeTrace patrol_run(patrol::PatrolConfig cfg, std::uint64_t seed) {
  cfg.episode_ticks = 300;
  const auto env = patrol::make_env(cfg, "patrol");
  Eager p;
  return run_episode(env, p, patrol::Extractor{}, seed);
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Handling annotations at every tick, with `respond` applied at tick `at`.
EpisodeTrace synthetic(int n, int at, bool boundary_at = false) {
  EpisodeTrace t;
  t.action_names = {"handle_next_checkpoint", "respond_alarm"};
  t.event_names = {"status", "alarm_spawn"};
  for (int k = 0; k < n; ++k) {
    TickRecord r;
    r.tick = k;
    r.annotation = {{"mode", "handle_ckpt"}, {"boundary", k == at && boundary_at}};
    if (k == at) r.interventions.insert({1, 0});
    t.ticks.push_back(r);
  }
  return t;
}

}  // namespace

TEST(Render, QuietTraceShowsAgentAndCheckpointsOnly) {
  auto cfg = patrol::PatrolConfig::module_level();
  cfg.alarm_prob_per_tick = 0.0;
  const auto tr = patrol_run(cfg, 1);
  const auto full = render_window(tr, 0, 5, Format::ascii);
  const auto doc = full.substr(0, full.find("legend:"));
  EXPECT_EQ(doc.find('!'), std::string::npos);
  EXPECT_NE(doc.find('*'), std::string::npos);
  EXPECT_NE(doc.find('c'), std::string::npos);
  EXPECT_NE(doc.find("no alarm"), std::string::npos);
  EXPECT_FALSE(find_first_event(tr, Criterion::first_interruption).has_value());
  EXPECT_FALSE(find_first_event(tr, Criterion::first_alarm_during_handling).has_value());
}

TEST(Render, DeadlineCountsDownAcrossPanels) {
  const auto tr = patrol_run(patrol::PatrolConfig::module_level(), 42);
  int checked = 0;
  for (std::size_t k = 0; k + 1 < tr.ticks.size(); ++k) {
    const auto a = panel_at(tr, k), b = panel_at(tr, k + 1);
    if (!a.alarm || !b.alarm || a.deadline < 2) continue;
    EXPECT_EQ(b.deadline, a.deadline - 1);
    const auto doc = render_window(tr, static_cast<Tick>(k), 2, Format::ascii);
    const std::string at = "alarm (" + std::to_string(a.alarm->first) + "," + std::to_string(a.alarm->second) + ") ";
    EXPECT_NE(doc.find(at + std::to_string(a.deadline) + " "), std::string::npos);
    EXPECT_NE(doc.find(at + std::to_string(b.deadline) + " "), std::string::npos);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Render, PanelsMatchAnnotations) {
  const auto tr = patrol_run(patrol::PatrolConfig::state_level(3), 7);
  for (std::size_t k = 0; k < tr.ticks.size(); ++k) {
    const auto p = panel_at(tr, k);
    const auto& a = tr.ticks[k].annotation;
    EXPECT_EQ(p.mode, a["mode"]);
    EXPECT_EQ(p.pos.first, a["pos"][0]);
    if (a.contains("remaining")) EXPECT_EQ(*p.remaining, a["remaining"]);
    if (!a["alarm"].is_null()) EXPECT_EQ(p.deadline, a["alarm"]["deadline"]);
  }
}

TEST(Render, DeterministicBytesAndWidth) {
  const auto tr = patrol_run(patrol::PatrolConfig::state_level(2), 3);
  const auto a = render_window(tr, 10, 5, Format::ascii);
  EXPECT_EQ(a, render_window(tr, 10, 5, Format::ascii));
  for (const auto& l : lines_of(a)) EXPECT_LE(l.size(), static_cast<std::size_t>(kAsciiWidth));
  EXPECT_EQ(lines_of(a).front().size(), static_cast<std::size_t>(kAsciiWidth));
  const auto s = render_window(tr, 10, 5, Format::svg);
  EXPECT_EQ(s, render_window(tr, 10, 5, Format::svg));
  EXPECT_EQ(s.rfind("<?xml", 0), 0u);
  EXPECT_NE(s.find("version=\"1.1\""), std::string::npos);
  EXPECT_EQ(s.substr(s.size() - 7), "</svg>\n");
}

TEST(Render, WindowOutOfRange) {
  const auto tr = patrol_run(patrol::PatrolConfig::module_level(), 3);
  EXPECT_THROW(render_window(tr, 298, 5, Format::ascii), std::out_of_range);
  EXPECT_THROW(render_window(tr, -1, 2, Format::ascii), std::out_of_range);
  EXPECT_THROW(render_window(tr, 0, 0, Format::ascii), std::out_of_range);
  EXPECT_THROW(render_window(EpisodeTrace{}, 0, 1, Format::ascii), std::out_of_range);
}

TEST(FindFirstEvent, SyntheticInterruption) {
  EXPECT_EQ(find_first_event(synthetic(8, 3), Criterion::first_interruption), 3);
  EXPECT_FALSE(find_first_event(synthetic(8, 3, true), Criterion::first_interruption).has_value());
  auto t = synthetic(8, -1);
  t.ticks[5].observations.emit(1, 5);
  EXPECT_EQ(find_first_event(t, Criterion::first_alarm_during_handling), 5);
  EXPECT_FALSE(find_first_event(t, Criterion::first_interruption).has_value());
}

TEST(FindFirstEvent, EagerPatrolSwitchesFromHandlingToAlarm) {
  const auto tr = patrol_run(patrol::PatrolConfig::module_level(), 42);
  const auto hit = find_first_event(tr, Criterion::first_interruption);
  ASSERT_TRUE(hit.has_value());
  const auto k = static_cast<std::size_t>(*hit);
  EXPECT_EQ(panel_at(tr, k).mode, "handle_ckpt");
  EXPECT_EQ(panel_at(tr, k + 1).mode, "nav_alarm");
  const auto doc = render_window(tr, *hit, 2, Format::ascii);
  EXPECT_NE(doc.find("[H] handle_ckpt"), std::string::npos);
  EXPECT_NE(doc.find("[A] nav_alarm"), std::string::npos);
}
