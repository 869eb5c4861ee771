#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/core/process.hpp"

// Urgency-aware deliberation: the agent picks one of five deliberation
// modes per task; deeper modes succeed more often but take longer. Under EP
// semantics deliberation consumes clock time, under Step it does not.

namespace eplab::deliberation {

inline constexpr int kModes = 5;
inline constexpr int kUrgencyBuckets = 5;
inline constexpr int kDifficultyBins = 3;

enum class Semantics { ep, step };

inline std::string to_string(Semantics s) { return s == Semantics::ep ? "ep" : "step"; }

struct DeliberationConfig {
  std::array<double, kModes> mode_durations_s{0.2, 0.8, 1.6, 3.0, 5.0};
  std::array<double, kModes> mode_alphas{0.0, 0.8, 1.6, 2.4, 3.2};
  double beta = 3.5;
  std::array<double, 5> slack_choices_s{0.3, 1.0, 2.0, 4.0, 8.0};
  std::array<double, 5> deadline_gaps_s{0.4, 0.9, 1.6, 3.5, 5.5};
  std::array<double, 2> difficulty_bin_edges{0.33, 0.66};
  std::array<double, kUrgencyBuckets - 1> urgency_edges_s{0.65, 1.5, 3.0, 6.0};
  double reward_success = 4.0;
  double penalty_fail = -2.0;
  int tasks_per_episode = 1;
  double gamma_second = 0.995;
  double gamma_task = 0.95;
  int ticks_per_second = 10;

  static DeliberationConfig single_task() { return {}; }
  static DeliberationConfig sequential() {
    DeliberationConfig c;
    c.tasks_per_episode = 10;
    return c;
  }

  void validate() const {
    for (int m = 1; m < kModes; ++m) {
      if (!(mode_durations_s[m] > mode_durations_s[m - 1])) {
        throw std::invalid_argument("deliberation: mode durations must be strictly increasing");
      }
      if (!(mode_alphas[m] > mode_alphas[m - 1])) {
        throw std::invalid_argument("deliberation: mode alphas must be strictly increasing");
      }
    }
    if (!(mode_durations_s[0] > 0.0)) throw std::invalid_argument("deliberation: durations must be positive");
    const auto [lo, hi] = difficulty_bin_edges;
    if (!(lo > 0.0 && lo < hi && hi < 1.0)) {
      throw std::invalid_argument("deliberation: difficulty bin edges must be increasing in (0,1)");
    }
    for (std::size_t i = 1; i < urgency_edges_s.size(); ++i) {
      if (!(urgency_edges_s[i] > urgency_edges_s[i - 1])) {
        throw std::invalid_argument("deliberation: urgency edges must be increasing");
      }
    }
    if (tasks_per_episode < 1) throw std::invalid_argument("deliberation: tasks_per_episode must be >= 1");
    if (ticks_per_second < 1) throw std::invalid_argument("deliberation: ticks_per_second must be >= 1");
    if (!(gamma_second > 0.0 && gamma_second <= 1.0) || !(gamma_task > 0.0 && gamma_task <= 1.0)) {
      throw std::invalid_argument("deliberation: discounts must lie in (0,1]");
    }
  }

  int duration_ticks(int mode) const {
    return static_cast<int>(std::lround(mode_durations_s.at(static_cast<std::size_t>(mode - 1)) * ticks_per_second));
  }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Pr(success | mode, u) = sigma(alpha_m - beta * u).
inline double success_prob(int mode, double u, const DeliberationConfig& cfg) {
  if (mode < 1 || mode > kModes) throw std::out_of_range("deliberation mode " + std::to_string(mode));
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("difficulty must lie in [0,1]");
  return sigmoid(cfg.mode_alphas[static_cast<std::size_t>(mode - 1)] - cfg.beta * u);
}

inline int difficulty_bin(double u, const DeliberationConfig& cfg) {
  if (u < cfg.difficulty_bin_edges[0]) return 0;
  if (u < cfg.difficulty_bin_edges[1]) return 1;
  return 2;
}

inline int urgency_bucket(double slack_s, const DeliberationConfig& cfg) {
  int b = 0;
  for (double edge : cfg.urgency_edges_s) {
    if (slack_s > edge) ++b;
  }
  return b;
}

enum class OutcomeKind { success = 0, failure = 1, timeout = 2 };

struct Outcome {
  int task = 0;
  OutcomeKind kind = OutcomeKind::failure;
};

struct Task {
  double deadline_s = 0.0;  // absolute
  double difficulty = 0.0;
};

struct Pending {
  int mode = 1;
  int remaining = 0;  // ticks until resolution
};

struct DeliberationState {
  Semantics semantics = Semantics::ep;
  Tick clock_ticks = 0;
  std::vector<Task> tasks;
  int current = 0;
  bool presented = true;  // current task is on offer
  std::optional<Pending> pending;
  std::vector<Outcome> just_resolved;

  int successes = 0, failures = 0, timeouts = 0, decisions = 0;
  std::array<int, kModes> mode_use{};
  std::array<std::array<int, kModes>, kUrgencyBuckets> choices_by_urgency{};

  bool awaiting_decision() const {
    return current < static_cast<int>(tasks.size()) && !pending && presented;
  }
  bool done() const { return current >= static_cast<int>(tasks.size()) && !pending; }
};

enum Event : int { kTaskEvent = 0, kOutcomeEvent = 1 };

inline double clock_seconds(const DeliberationState& s, const DeliberationConfig& cfg) {
  return static_cast<double>(s.clock_ticks) / cfg.ticks_per_second;
}

inline double remaining_slack(const DeliberationState& s, const DeliberationConfig& cfg) {
  return s.tasks[static_cast<std::size_t>(s.current)].deadline_s - clock_seconds(s, cfg);
}

namespace detail {

inline bool past_deadline(const DeliberationState& s, const Task& task, const DeliberationConfig& cfg) {
  return static_cast<double>(s.clock_ticks) > task.deadline_s * cfg.ticks_per_second + 1e-9;
}

// Resolution and presentation of the next task happen on different ticks,
// so a task's outcome is never scored on the tick of the next decision.
// Tasks that expired while waiting are scored on a tick of their own too.
inline void present_next(DeliberationState& s, const DeliberationConfig& cfg) {
  while (s.current < static_cast<int>(s.tasks.size()) &&
         past_deadline(s, s.tasks[static_cast<std::size_t>(s.current)], cfg)) {
    s.just_resolved.push_back({s.current, OutcomeKind::timeout});
    ++s.timeouts;
    ++s.current;
  }
  if (s.just_resolved.empty()) s.presented = true;
}

inline void resolve(DeliberationState& s, int mode, const DeliberationConfig& cfg, Rng& rng) {
  const Task& task = s.tasks[static_cast<std::size_t>(s.current)];
  OutcomeKind kind;
  if (s.semantics == Semantics::ep && past_deadline(s, task, cfg)) {
    kind = OutcomeKind::timeout;
    ++s.timeouts;
  } else if (rng.bernoulli(success_prob(mode, task.difficulty, cfg))) {
    kind = OutcomeKind::success;
    ++s.successes;
  } else {
    kind = OutcomeKind::failure;
    ++s.failures;
  }
  s.just_resolved.push_back({s.current, kind});
  s.pending.reset();
  ++s.current;
  s.presented = false;
}

inline DeliberationState transition(const DeliberationState& s, const InterventionSet& a,
                                    const DeliberationConfig& cfg, Rng& rng) {
  DeliberationState next = s;
  next.just_resolved.clear();
  if (!a.empty()) {
    const int mode = a.actions().front().id + 1;
    const int bucket = urgency_bucket(remaining_slack(s, cfg), cfg);
    ++next.decisions;
    ++next.mode_use[static_cast<std::size_t>(mode - 1)];
    ++next.choices_by_urgency[static_cast<std::size_t>(bucket)][static_cast<std::size_t>(mode - 1)];
    if (s.semantics == Semantics::step) {
      resolve(next, mode, cfg, rng);
      return next;
    }
    next.pending = Pending{mode, cfg.duration_ticks(mode)};
  }
  if (next.pending) {
    ++next.clock_ticks;
    if (--next.pending->remaining == 0) resolve(next, next.pending->mode, cfg, rng);
  } else if (!next.presented) {
    present_next(next, cfg);
  }
  return next;
}

}  // namespace detail

inline DeliberationState initial_state(const DeliberationConfig& cfg, Semantics semantics, Rng& rng) {
  DeliberationState s;
  s.semantics = semantics;
  const auto n = static_cast<std::size_t>(cfg.tasks_per_episode);
  s.tasks.resize(n);
  if (cfg.tasks_per_episode == 1) {
    const auto idx = static_cast<std::size_t>(rng.uniform_int(0, 4));
    s.tasks[0] = {cfg.slack_choices_s[idx], rng.uniform()};
  } else {
    double deadline = 0.0;
    for (auto& task : s.tasks) {
      deadline += cfg.deadline_gaps_s[static_cast<std::size_t>(rng.uniform_int(0, 4))];
      task = {deadline, rng.uniform()};
    }
  }
  return s;
}

inline ProcessSpec<DeliberationState> make_env(const DeliberationConfig& cfg_in, Semantics semantics,
                                               const std::string& name) {
  cfg_in.validate();
  const DeliberationConfig cfg = cfg_in;
  ProcessSpec<DeliberationState> spec;
  spec.name = name + "-" + to_string(semantics);
  spec.horizon = static_cast<Tick>(cfg.tasks_per_episode) * (cfg.duration_ticks(kModes) + 3) + 2;
  // Step time never advances the clock, so only EP discounts per tick.
  spec.gamma_tick = semantics == Semantics::ep ? std::pow(cfg.gamma_second, 1.0 / cfg.ticks_per_second) : 1.0;
  for (int m = 1; m <= kModes; ++m) spec.action_names.push_back("mode" + std::to_string(m));
  spec.event_names = {"task", "outcome"};

  spec.initial = [cfg, semantics](Streams& rng) { return initial_state(cfg, semantics, rng.arrival); };

  spec.violation = [](const DeliberationState& s, const InterventionSet& a) -> std::optional<AtomicAction> {
    if (s.awaiting_decision()) {
      if (a.empty()) return AtomicAction{-1, 0};
      if (a.size() > 1) return a.actions()[1];
      const auto& act = a.actions().front();
      if (act.id < 0 || act.id >= kModes || act.arg != 0) return act;
      return std::nullopt;
    }
    if (!a.empty()) return a.actions().front();
    return std::nullopt;
  };

  spec.enumerate = [](const DeliberationState& s) {
    std::vector<InterventionSet> menu;
    if (s.awaiting_decision()) {
      for (int m = 0; m < kModes; ++m) menu.push_back(InterventionSet::single(m));
    } else {
      menu.emplace_back();
    }
    return menu;
  };

  spec.transition = [cfg](const DeliberationState& s, const InterventionSet& a, Streams& rng) {
    return detail::transition(s, a, cfg, rng.transition);
  };

  spec.observe = [cfg](const DeliberationState& s, Tick t, Streams&) {
    ObservationSet y;
    for (const auto& o : s.just_resolved) {
      y.emit(kOutcomeEvent, t, {static_cast<double>(o.task), static_cast<double>(static_cast<int>(o.kind))});
    }
    if (s.awaiting_decision()) {
      const Task& task = s.tasks[static_cast<std::size_t>(s.current)];
      const double slack = remaining_slack(s, cfg);
      y.emit(kTaskEvent, t,
             {static_cast<double>(s.current), static_cast<double>(urgency_bucket(slack, cfg)),
              static_cast<double>(difficulty_bin(task.difficulty, cfg)), slack});
    }
    return y;
  };

  spec.utility = [cfg](const DeliberationState& s, const InterventionSet&, Tick t) {
    UtilityList us;
    for (const auto& o : s.just_resolved) {
      if (o.kind == OutcomeKind::success) {
        us.push_back({cfg.reward_success, t, UtilityTag::task_reward});
      } else {
        us.push_back({cfg.penalty_fail, t, UtilityTag::penalty});
      }
    }
    return us;
  };

  spec.terminal = [](const DeliberationState& s) {
    return s.current >= static_cast<int>(s.tasks.size()) && s.just_resolved.empty();
  };
  spec.boundary = [](const DeliberationState& s) { return s.awaiting_decision(); };

  spec.annotate = [cfg](const DeliberationState& s) {
    Annotation a;
    a["clock_s"] = clock_seconds(s, cfg);
    a["task"] = s.current;
    a["pending_mode"] = s.pending ? s.pending->mode : 0;
    a["pending_remaining"] = s.pending ? s.pending->remaining : 0;
    if (s.current < static_cast<int>(s.tasks.size())) {
      a["deadline_s"] = s.tasks[static_cast<std::size_t>(s.current)].deadline_s;
    }
    return a;
  };

  spec.counters = [](const DeliberationState& s) {
    Counters c;
    c["tasks"] = static_cast<double>(s.tasks.size());
    c["successes"] = s.successes;
    c["failures"] = s.failures;
    c["timeouts"] = s.timeouts;
    c["decisions"] = s.decisions;
    for (int m = 0; m < kModes; ++m) c["mode" + std::to_string(m + 1)] = s.mode_use[static_cast<std::size_t>(m)];
    for (int b = 0; b < kUrgencyBuckets; ++b) {
      for (int m = 0; m < kModes; ++m) {
        c["u" + std::to_string(b) + "_m" + std::to_string(m + 1)] =
            s.choices_by_urgency[static_cast<std::size_t>(b)][static_cast<std::size_t>(m)];
      }
    }
    return c;
  };
  return spec;
}

inline ProcessSpec<DeliberationState> make_single_task_env(const DeliberationConfig& cfg, Semantics semantics) {
  if (cfg.tasks_per_episode != 1) throw std::invalid_argument("single-task env needs tasks_per_episode = 1");
  return make_env(cfg, semantics, "deliberation-single");
}

inline ProcessSpec<DeliberationState> make_sequential_env(const DeliberationConfig& cfg, Semantics semantics) {
  if (cfg.tasks_per_episode < 2) throw std::invalid_argument("sequential env needs at least two tasks");
  return make_env(cfg, semantics, "deliberation-sequential");
}

// -- agent side --------------------------------------------------------------

// What the agent knows: the latest task presentation (urgency bucket and
// difficulty bin), never the raw difficulty.
struct Info {
  bool has_task = false;
  int task = -1;
  int urgency = 0;
  int difficulty = 0;
};

struct Extractor {
  using Info = deliberation::Info;

  static void absorb(Info& w, const ObservationSet& y) {
    bool presented = false;
    for (const auto& e : y.events) {
      if (e.id == kTaskEvent) {
        w.has_task = true;
        w.task = static_cast<int>(e.payload[0]);
        w.urgency = static_cast<int>(e.payload[1]);
        w.difficulty = static_cast<int>(e.payload[2]);
        presented = true;
      }
    }
    if (!presented && !y.empty()) w.has_task = false;
  }
  Info start(const ObservationSet& y0) const {
    Info w;
    absorb(w, y0);
    return w;
  }
  void advance(Info& w, const InterventionSet& a, const ObservationSet& y, const UtilityList&, Tick) const {
    if (!a.empty()) w.has_task = false;
    absorb(w, y);
  }
};

// Discrete key and action coding shared by both semantics, so a table
// trained under one applies directly under the other.
struct Learning {
  using Info = deliberation::Info;
  static constexpr int kActions = kModes;
  static std::vector<int> key(const Info& w) { return {w.urgency, w.difficulty}; }
  static int action_index(const InterventionSet& a) { return a.empty() ? -1 : a.actions().front().id; }
};

}  // namespace eplab::deliberation
