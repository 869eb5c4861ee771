#include <gtest/gtest.h>

#include <sstream>

#include "eplab/core/process.hpp"
#include "eplab/core/trace_io.hpp"
#include "eplab/envs/assistant.hpp"
#include "eplab/envs/deliberation.hpp"
#include "eplab/envs/patrol.hpp"
#include "support/policies.hpp"

using namespace eplab;
using testing_policies::Constant;
using testing_policies::UniformMenu;

namespace {

constexpr int kEvent = 0;
constexpr int kPush = 0;

// s0 -> s1 deterministically; "e" is emitted iff the state is s1. Utility is
// -0.5 per tick plus +1 when {push} is applied in s0.
ProcessSpec<int> chain(Tick horizon) {
  ProcessSpec<int> spec;
  spec.name = "chain";
  spec.horizon = horizon;
  spec.action_names = {"push"};
  spec.event_names = {"e"};
  spec.initial = [](Streams&) { return 0; };
  spec.violation = [](const int& s, const InterventionSet& a) -> std::optional<AtomicAction> {
    if (s == 1 && !a.empty()) return a.actions().front();
    return std::nullopt;
  };
  spec.enumerate = [](const int& s) {
    std::vector<InterventionSet> m{InterventionSet{}};
    if (s == 0) m.push_back(InterventionSet::single(kPush));
    return m;
  };
  spec.transition = [](const int&, const InterventionSet&, Streams&) { return 1; };
  spec.observe = [](const int& s, Tick t, Streams&) {
    ObservationSet y;
    if (s == 1) y.emit(kEvent, t);
    return y;
  };
  spec.utility = [](const int& s, const InterventionSet& a, Tick t) {
    UtilityList u{{-0.5, t, UtilityTag::time_cost}};
    if (s == 0 && a.contains_id(kPush)) u.push_back({1.0, t, UtilityTag::task_reward});
    return u;
  };
  spec.annotate = [](const int& s) { return Annotation{{"s", s}}; };
  return spec;
}

}  // namespace

TEST(Step, IdentityWithSilentKernelIsAFixedPoint) {
  ProcessSpec<int> spec = chain(1);
  spec.transition = [](const int& s, const InterventionSet&, Streams&) { return s; };
  spec.observe = [](const int&, Tick, Streams&) { return ObservationSet{}; };
  spec.utility = [](const int&, const InterventionSet&, Tick t) { return UtilityList{{0.0, t, UtilityTag::other}}; };
  Streams rng(1);
  const auto r = step(spec, 0, {}, rng, 0);
  EXPECT_EQ(r.next, 0);
  EXPECT_TRUE(r.observations.empty());
  ASSERT_EQ(r.utilities.size(), 1u);
  EXPECT_EQ(r.utilities[0].value, 0.0);
}

TEST(Step, TwoStateChainEmitsFromNextState) {
  const auto spec = chain(5);
  Streams rng(1);
  const auto r = step(spec, 0, InterventionSet::single(kPush), rng, 3);
  EXPECT_EQ(r.next, 1);
  ASSERT_EQ(r.observations.size(), 1u);
  EXPECT_EQ(r.observations.events[0].id, kEvent);
  EXPECT_EQ(r.observations.events[0].emitted_at, 4);
  // Utility is evaluated at (s0, {push}).
  EXPECT_DOUBLE_EQ(utility_sum(r.utilities), 0.5);
  EXPECT_EQ(r.utilities[0].tick, 3);
}

TEST(Step, InadmissibleSetCarriesActionId) {
  const auto spec = chain(5);
  Streams rng(1);
  try {
    (void)step(spec, 1, InterventionSet::single(kPush), rng, 7);
    FAIL() << "expected a rejection";
  } catch (const InadmissibleIntervention& e) {
    EXPECT_EQ(e.action_id(), kPush);
    EXPECT_EQ(e.tick(), 7);
  }
}

TEST(InterventionSetType, RejectsDuplicates) {
  InterventionSet s;
  s.insert({2, 1});
  s.insert({2, 2});
  EXPECT_THROW(s.insert({2, 1}), std::invalid_argument);
  EXPECT_EQ(s.size(), 2u);
}

TEST(RunEpisode, HorizonZeroIsEmpty) {
  Constant p;
  const auto tr = run_episode(chain(0), p, FullHistoryExtractor{}, 1);
  EXPECT_TRUE(tr.ticks.empty());
  EXPECT_EQ(tr.length, 0);
  EXPECT_EQ(tr.total_return, 0.0);
  EXPECT_EQ(tr.discounted_return, 0.0);
}

TEST(RunEpisode, ConstantCostSumsOverHorizon) {
  Constant p;
  const auto tr = run_episode(chain(4), p, FullHistoryExtractor{}, 1);
  EXPECT_EQ(tr.length, 4);
  EXPECT_DOUBLE_EQ(tr.total_return, -2.0);
  EXPECT_DOUBLE_EQ(tr.discounted_return, -2.0);
  EXPECT_DOUBLE_EQ(tr.tag_sums[static_cast<std::size_t>(UtilityTag::time_cost)], -2.0);
}

TEST(RunEpisode, InadmissiblePolicyAbortsWithTick) {
  Constant p{InterventionSet::single(kPush)};
  try {
    (void)run_episode(chain(4), p, FullHistoryExtractor{}, 1);
    FAIL() << "expected abort";
  } catch (const EpisodeAborted& e) {
    EXPECT_EQ(e.tick(), 1);
  }
}

TEST(RunEpisode, GateLimitsConsultation) {
  auto spec = chain(4);
  spec.boundary = [](const int& s) { return s == 0; };
  Constant p{InterventionSet::single(kPush), DecisionGate::boundary_only};
  const auto tr = run_episode(spec, p, FullHistoryExtractor{}, 1);
  ASSERT_EQ(tr.ticks.size(), 4u);
  EXPECT_TRUE(tr.ticks[0].consulted);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_FALSE(tr.ticks[i].consulted);
    EXPECT_TRUE(tr.ticks[i].interventions.empty());
  }
  EXPECT_DOUBLE_EQ(tr.total_return, -1.0);
}

TEST(DiscountedReturn, Examples) {
  const std::vector<double> a{1, 2, 3}, b{4, 2}, c{1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(discounted_return(a, 1.0), 6.0);
  EXPECT_DOUBLE_EQ(discounted_return(b, 0.5), 5.0);
  EXPECT_NEAR(discounted_return(c, 0.9), 1 + 0.9 + 0.81 + 0.729, 1e-12);
  EXPECT_NEAR(discounted_return(c, 0.9), 3.439, 1e-12);
}

TEST(RunEpisode, DeterministicUnderSeed) {
  const auto env = deliberation::make_sequential_env(deliberation::DeliberationConfig::sequential(),
                                                     deliberation::Semantics::ep);
  UniformMenu p;
  const auto a = run_episode(env, p, deliberation::Extractor{}, 99);
  const auto b = run_episode(env, p, deliberation::Extractor{}, 99);
  EXPECT_EQ(a, b);
  EXPECT_EQ(trace_to_string(a), trace_to_string(b));
  const auto c = run_episode(env, p, deliberation::Extractor{}, 100);
  EXPECT_NE(trace_to_string(a), trace_to_string(c));
}

TEST(RunEpisode, TagSumsEqualReturnWithoutDiscount) {
  const auto env = patrol::state_level_env(patrol::PatrolConfig::state_level(3), 3);
  UniformMenu p;
  const auto tr = run_episode(env, p, patrol::Extractor{}, 5, RunOptions{false});
  double sum = 0.0;
  for (double v : tr.tag_sums) sum += v;
  EXPECT_NEAR(sum, tr.total_return, 1e-9);
}

TEST(RunEpisode, HistoryMatchesTrace) {
  const auto spec = chain(3);
  Constant p;
  const auto tr = run_episode(spec, p, FullHistoryExtractor{}, 1);
  const History h = history_of(tr);
  EXPECT_TRUE(h.initial.empty());
  ASSERT_EQ(h.elapsed(), 3);
  for (const auto& r : h.records) EXPECT_NE(r.observations.find(kEvent), nullptr);
}

// Counting kernels: utility sees s_t, observation sees s_{t+1}.
TEST(Ordering, UtilityFromCurrentObservationFromNext) {
  ProcessSpec<int> spec;
  spec.name = "counter";
  spec.horizon = 5;
  spec.initial = [](Streams&) { return 0; };
  spec.violation = [](const int&, const InterventionSet&) -> std::optional<AtomicAction> { return std::nullopt; };
  spec.transition = [](const int& s, const InterventionSet&, Streams&) { return s + 1; };
  spec.observe = [](const int& s, Tick t, Streams&) {
    ObservationSet y;
    y.emit(0, t, {static_cast<double>(s)});
    return y;
  };
  spec.utility = [](const int& s, const InterventionSet&, Tick t) {
    return UtilityList{{static_cast<double>(s), t, UtilityTag::other}};
  };
  Constant p;
  const auto tr = run_episode(spec, p, FullHistoryExtractor{}, 1);
  for (const auto& rec : tr.ticks) {
    EXPECT_EQ(rec.utilities[0].value, static_cast<double>(rec.tick));
    EXPECT_EQ(rec.observations.events[0].payload[0], static_cast<double>(rec.tick));
    EXPECT_EQ(rec.observations.events[0].emitted_at, rec.tick);
  }
  EXPECT_EQ(tr.final_observations.events[0].payload[0], 5.0);
}

TEST(Streams, SubstreamsAreIndependent) {
  Streams a(7), b(7);
  for (int i = 0; i < 10; ++i) (void)b.observation.uniform();
  EXPECT_EQ(a.transition.uniform(), b.transition.uniform());
  EXPECT_NE(episode_seed(1, 0), episode_seed(1, 1));
  EXPECT_EQ(mix_seed(3, 4), mix_seed(3, 4));
}

TEST(TraceIo, RoundTripsEveryField) {
  const auto env = deliberation::make_sequential_env(deliberation::DeliberationConfig::sequential(),
                                                     deliberation::Semantics::ep);
  UniformMenu p;
  const auto tr = run_episode(env, p, deliberation::Extractor{}, 4);
  const std::string text = trace_to_string(tr);
  std::istringstream in(text);
  const auto back = read_trace(in);
  EXPECT_EQ(back.env, tr.env);
  EXPECT_EQ(back.seed, tr.seed);
  EXPECT_EQ(back.ticks.size(), tr.ticks.size());
  EXPECT_EQ(back.counters, tr.counters);
  EXPECT_EQ(trace_to_string(back), text);
}

TEST(TraceIo, OneLinePerTickPlusHeaderAndSummary) {
  Constant p;
  const auto tr = run_episode(chain(3), p, FullHistoryExtractor{}, 1);
  const std::string text = trace_to_string(tr);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  std::istringstream in(text);
  std::string first;
  std::getline(in, first);
  const auto header = nlohmann::json::parse(first);
  EXPECT_EQ(header.at("env"), "chain");
}

TEST(TraceIo, RejectsGarbage) {
  std::istringstream in("not json\n");
  EXPECT_ANY_THROW((void)read_trace(in));
}

// Every shipped environment lets the world run on under the empty set
// wherever it defines a continuation.
TEST(EmptySet, AdmissibleWhereverTheWorldContinues) {
  {
    const auto env = patrol::state_level_env(patrol::PatrolConfig::state_level(2), 2);
    Streams rng(3);
    auto s = env.initial(rng);
    for (Tick t = 0; t < 300; ++t) {
      ASSERT_FALSE(env.violation(s, {}).has_value()) << "patrol tick " << t;
      s = step(env, s, {}, rng, t).next;
    }
  }
  {
    const auto env = assistant::make_env(assistant::AssistantConfig{}, assistant::Interface::ep);
    Streams rng(3);
    auto s = env.initial(rng);
    for (Tick t = 0; t < 300; ++t) {
      ASSERT_FALSE(env.violation(s, {}).has_value()) << "assistant tick " << t;
      s = step(env, s, {}, rng, t).next;
    }
  }
  {
    const auto env = deliberation::make_sequential_env(deliberation::DeliberationConfig::sequential(),
                                                       deliberation::Semantics::ep);
    Streams rng(3);
    auto s = env.initial(rng);
    int continuations = 0;
    for (Tick t = 0; t < env.horizon && !env.terminal(s); ++t) {
      InterventionSet a;
      if (s.awaiting_decision()) {
        a = InterventionSet::single(1);
      } else {
        ASSERT_FALSE(env.violation(s, {}).has_value()) << "deliberation tick " << t;
        ++continuations;
      }
      s = step(env, s, a, rng, t).next;
    }
    EXPECT_GT(continuations, 0);
  }
}
