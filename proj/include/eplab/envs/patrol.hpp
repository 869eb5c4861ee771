#pragma once

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/core/process.hpp"

// Grid patrol with asynchronous alarms. The agent cycles through checkpoints
// and handles each one (a single module, or a sequence of phases); alarms
// appear at random cells and must be reached and resolved before their
// deadline runs out.

namespace eplab::patrol {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

// One cell per tick, x before y.
inline Cell nav_step(Cell pos, Cell target) {
  if (pos.x != target.x) {
    pos.x += pos.x < target.x ? 1 : -1;
  } else if (pos.y != target.y) {
    pos.y += pos.y < target.y ? 1 : -1;
  }
  return pos;
}

enum class PhaseKind { handle = 0, observe = 1, verify = 2, commit = 3 };

inline std::string to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::handle: return "handle";
    case PhaseKind::observe: return "observe";
    case PhaseKind::verify: return "verify";
    case PhaseKind::commit: return "commit";
  }
  return "handle";
}

struct PhaseSpec {
  PhaseKind kind = PhaseKind::handle;
  int duration_ticks = 1;
  double interrupt_cost = 0.0;  // <= 0
};

struct PatrolConfig {
  int grid_size = 8;
  std::vector<Cell> checkpoints{{0, 0}, {0, 7}, {7, 7}, {7, 0}};
  int episode_ticks = 1000;
  int handle_ticks = 20;
  double checkpoint_reward = 1.0;
  double alarm_prob_per_tick = 0.15;
  int alarm_min_distance = 5;
  int deadline_lo = 14;
  int deadline_hi = 22;
  int resolve_ticks = 2;
  double alarm_reward = 25.0;
  double expire_penalty = -20.0;
  double active_tick_penalty = -0.5;
  std::vector<PhaseSpec> phases;  // empty: a single module of handle_ticks
  double gamma = 0.99;

  static PatrolConfig module_level() { return {}; }

  static PatrolConfig state_level(int depth) {
    PatrolConfig c;
    c.checkpoints = {{1, 1}, {1, 6}, {6, 6}, {6, 1}};
    c.alarm_prob_per_tick = 0.07;
    c.deadline_lo = 7;
    c.deadline_hi = 12;
    if (depth == 2) {
      c.phases = {{PhaseKind::observe, 4, -1.0}, {PhaseKind::commit, 10, -5.0}};
    } else if (depth == 3) {
      c.phases = {{PhaseKind::observe, 3, -1.0}, {PhaseKind::verify, 5, -4.0}, {PhaseKind::commit, 10, -7.0}};
    } else {
      throw std::invalid_argument("state-level patrol depth must be 2 or 3");
    }
    return c;
  }

  int depth() const { return phases.empty() ? 1 : static_cast<int>(phases.size()); }
  bool module_level_handling() const { return phases.empty(); }

  std::vector<PhaseSpec> effective_phases() const {
    if (phases.empty()) return {{PhaseKind::handle, handle_ticks, 0.0}};
    return phases;
  }

  void validate() const {
    if (grid_size < 1) throw std::invalid_argument("patrol: grid_size must be positive");
    if (checkpoints.empty()) throw std::invalid_argument("patrol: no checkpoints");
    for (const auto& c : checkpoints) {
      if (c.x < 0 || c.y < 0 || c.x >= grid_size || c.y >= grid_size) {
        throw std::invalid_argument("patrol: checkpoint outside grid");
      }
    }
    if (deadline_lo > deadline_hi || deadline_lo < 1) throw std::invalid_argument("patrol: bad deadline range");
    if (resolve_ticks < 1 || handle_ticks < 1) throw std::invalid_argument("patrol: durations must be >= 1");
    for (const auto& p : phases) {
      if (p.duration_ticks < 1) throw std::invalid_argument("patrol: phase duration must be >= 1");
      if (p.interrupt_cost > 0.0) throw std::invalid_argument("patrol: interrupt costs must be <= 0");
    }
    if (!(alarm_prob_per_tick >= 0.0 && alarm_prob_per_tick <= 1.0)) {
      throw std::invalid_argument("patrol: alarm probability outside [0,1]");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("patrol: gamma outside (0,1]");
    if (episode_ticks < 0) throw std::invalid_argument("patrol: negative episode length");
    if (alarm_prob_per_tick > 0.0 && alarm_min_distance > 2 * (grid_size - 1)) {
      throw std::invalid_argument("patrol: alarm_min_distance exceeds the grid diameter");
    }
  }
};

enum class Mode { patrol_nav = 0, alarm_nav = 1, resolving = 2, handling = 3 };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::patrol_nav: return "nav_patrol";
    case Mode::alarm_nav: return "nav_alarm";
    case Mode::resolving: return "resolve";
    case Mode::handling: return "handle_ckpt";
  }
  return "?";
}

struct Alarm {
  Cell pos;
  int deadline = 0;  // ticks remaining
  Tick spawn_tick = 0;
};

struct PatrolState {
  Tick clock = 0;
  Cell pos;
  Mode mode = Mode::handling;
  int target = 0;
  int phase = 0;
  int phase_remaining = 0;
  int resolve_remaining = 0;
  std::vector<int> saved_phase;      // per checkpoint, phase to resume at (-1 none)
  std::vector<int> saved_remaining;  // per checkpoint, ticks left in that phase (-1: full)
  std::optional<Alarm> alarm;
  bool boundary = true;

  // what the last transition did
  bool checkpoint_done = false;
  bool resolved = false;
  bool expired = false;
  bool spawned = false;

  int alarms = 0, resolved_count = 0, expired_count = 0, checkpoints_done = 0, interruptions = 0;
  Tick resolve_ticks_sum = 0;

  bool responding() const { return mode == Mode::alarm_nav || mode == Mode::resolving; }
};

enum Action : int { kHandleNext = 0, kRespond = 1 };
enum Event : int { kStatus = 0, kSpawn = 1, kExpire = 2, kResolve = 3, kCheckpoint = 4 };

// Alarm arrival: only when none is active; position uniform over cells at
// Manhattan distance >= alarm_min_distance from `agent`.
inline std::optional<Alarm> spawn_alarm(Rng& rng, const PatrolConfig& cfg, Cell agent, bool alarm_active, Tick now) {
  if (alarm_active) return std::nullopt;
  if (!rng.bernoulli(cfg.alarm_prob_per_tick)) return std::nullopt;
  Cell c;
  do {
    c = {static_cast<int>(rng.uniform_int(0, cfg.grid_size - 1)), static_cast<int>(rng.uniform_int(0, cfg.grid_size - 1))};
  } while (manhattan(c, agent) < cfg.alarm_min_distance);
  const int deadline = static_cast<int>(rng.uniform_int(cfg.deadline_lo, cfg.deadline_hi));
  return Alarm{c, deadline, now};
}

namespace detail {

struct Env {
  PatrolConfig cfg;
  std::vector<PhaseSpec> phases;

  PatrolState initial() const {
    PatrolState s;
    s.pos = cfg.checkpoints.front();
    s.mode = Mode::handling;
    s.target = 0;
    s.phase = 0;
    s.phase_remaining = phases.front().duration_ticks;
    s.saved_phase.assign(cfg.checkpoints.size(), -1);
    s.saved_remaining.assign(cfg.checkpoints.size(), -1);
    s.boundary = true;
    return s;
  }

  void start_handling(PatrolState& s) const {
    const auto t = static_cast<std::size_t>(s.target);
    s.mode = Mode::handling;
    s.phase = std::max(0, s.saved_phase[t]);
    s.phase_remaining = s.saved_remaining[t] > 0 ? s.saved_remaining[t]
                                                 : phases[static_cast<std::size_t>(s.phase)].duration_ticks;
    s.saved_phase[t] = -1;
    s.saved_remaining[t] = -1;
    s.boundary = true;
  }

  // Leaves the current checkpoint routine, remembering where to resume.
  void suspend_handling(PatrolState& s) const {
    const auto t = static_cast<std::size_t>(s.target);
    s.saved_phase[t] = s.phase;
    s.saved_remaining[t] = cfg.module_level_handling() ? s.phase_remaining : -1;
  }

  PatrolState transition(const PatrolState& s, const InterventionSet& a, Rng& arrival) const {
    PatrolState n = s;
    n.clock = s.clock + 1;
    n.boundary = false;
    n.checkpoint_done = n.resolved = n.expired = n.spawned = false;

    if (a.contains_id(kRespond)) {
      if (s.mode == Mode::handling) {
        suspend_handling(n);
        if (!s.boundary) ++n.interruptions;
      }
      n.mode = Mode::alarm_nav;
    } else if (a.contains_id(kHandleNext)) {
      n.mode = Mode::patrol_nav;
    }

    switch (n.mode) {
      case Mode::patrol_nav: {
        const Cell goal = cfg.checkpoints[static_cast<std::size_t>(n.target)];
        n.pos = nav_step(n.pos, goal);
        if (n.pos == goal) start_handling(n);
        break;
      }
      case Mode::handling:
        if (--n.phase_remaining == 0) {
          ++n.phase;
          n.boundary = true;
          if (n.phase == static_cast<int>(phases.size())) {
            n.checkpoint_done = true;
            ++n.checkpoints_done;
            n.phase = 0;
            n.target = (n.target + 1) % static_cast<int>(cfg.checkpoints.size());
            n.mode = Mode::patrol_nav;
          } else {
            n.phase_remaining = phases[static_cast<std::size_t>(n.phase)].duration_ticks;
          }
        }
        break;
      case Mode::alarm_nav:
        n.pos = nav_step(n.pos, n.alarm->pos);
        if (n.pos == n.alarm->pos) {
          n.mode = Mode::resolving;
          n.resolve_remaining = cfg.resolve_ticks;
          n.boundary = true;
        }
        break;
      case Mode::resolving:
        if (--n.resolve_remaining == 0) {
          n.resolved = true;
          ++n.resolved_count;
          n.resolve_ticks_sum += s.clock - n.alarm->spawn_tick;
          n.alarm.reset();
          n.mode = Mode::patrol_nav;
          n.boundary = true;
        }
        break;
    }

    if (n.alarm && --n.alarm->deadline == 0) {
      n.expired = true;
      ++n.expired_count;
      n.alarm.reset();
      if (n.responding()) {
        n.mode = Mode::patrol_nav;
        n.boundary = true;
      }
    }

    if (auto al = spawn_alarm(arrival, cfg, n.pos, s.alarm.has_value(), s.clock)) {
      n.alarm = *al;
      n.spawned = true;
      ++n.alarms;
    }
    return n;
  }

  UtilityList utility(const PatrolState& s, const InterventionSet& a, Tick t) const {
    UtilityList us;
    if (s.checkpoint_done) us.push_back({cfg.checkpoint_reward, t, UtilityTag::task_reward});
    if (s.resolved) us.push_back({cfg.alarm_reward, t, UtilityTag::task_reward});
    if (s.expired) us.push_back({cfg.expire_penalty, t, UtilityTag::penalty});
    if (s.alarm) us.push_back({cfg.active_tick_penalty, t, UtilityTag::time_cost});
    if (a.contains_id(kRespond) && s.mode == Mode::handling) {
      const auto& ph = phases[static_cast<std::size_t>(s.phase)];
      if (s.phase_remaining < ph.duration_ticks && ph.interrupt_cost != 0.0) {
        us.push_back({ph.interrupt_cost, t, UtilityTag::interrupt_cost});
      }
    }
    return us;
  }

  ObservationSet observe(const PatrolState& s, Tick t) const {
    ObservationSet y;
    const int duration = s.mode == Mode::handling ? phases[static_cast<std::size_t>(s.phase)].duration_ticks : 0;
    y.emit(kStatus, t,
           {static_cast<double>(s.pos.x), static_cast<double>(s.pos.y), static_cast<double>(static_cast<int>(s.mode)),
            static_cast<double>(s.phase), static_cast<double>(s.mode == Mode::handling ? s.phase_remaining : 0),
            static_cast<double>(duration), s.alarm ? 1.0 : 0.0, s.alarm ? static_cast<double>(s.alarm->pos.x) : 0.0,
            s.alarm ? static_cast<double>(s.alarm->pos.y) : 0.0, s.alarm ? static_cast<double>(s.alarm->deadline) : 0.0,
            static_cast<double>(s.target), s.boundary ? 1.0 : 0.0});
    if (s.spawned) {
      y.emit(kSpawn, t,
             {static_cast<double>(s.alarm->pos.x), static_cast<double>(s.alarm->pos.y),
              static_cast<double>(s.alarm->deadline)});
    }
    if (s.expired) y.emit(kExpire, t);
    if (s.resolved) y.emit(kResolve, t);
    if (s.checkpoint_done) y.emit(kCheckpoint, t);
    return y;
  }

  Annotation annotate(const PatrolState& s) const {
    Annotation a;
    a["grid"] = cfg.grid_size;
    Annotation cps = Annotation::array();
    for (const auto& c : cfg.checkpoints) cps.push_back({c.x, c.y});
    a["checkpoints"] = std::move(cps);
    a["pos"] = {s.pos.x, s.pos.y};
    a["mode"] = to_string(s.mode);
    a["target"] = s.target;
    if (s.mode == Mode::handling) {
      a["phase"] = to_string(phases[static_cast<std::size_t>(s.phase)].kind);
      a["remaining"] = s.phase_remaining;
    }
    if (s.mode == Mode::resolving) a["remaining"] = s.resolve_remaining;
    Annotation saved = Annotation::object();
    for (std::size_t i = 0; i < s.saved_phase.size(); ++i) {
      if (s.saved_phase[i] < 0) continue;
      saved[std::to_string(i)] = s.saved_remaining[i] > 0 ? s.saved_remaining[i]
                                                          : phases[static_cast<std::size_t>(s.saved_phase[i])].duration_ticks;
    }
    a["saved"] = std::move(saved);
    if (s.alarm) {
      a["alarm"] = {{"pos", {s.alarm->pos.x, s.alarm->pos.y}}, {"deadline", s.alarm->deadline}};
    } else {
      a["alarm"] = nullptr;
    }
    a["boundary"] = s.boundary;
    return a;
  }
};

}  // namespace detail

inline ProcessSpec<PatrolState> make_env(const PatrolConfig& cfg_in, const std::string& name) {
  cfg_in.validate();
  auto env = std::make_shared<const detail::Env>(detail::Env{cfg_in, cfg_in.effective_phases()});
  ProcessSpec<PatrolState> spec;
  spec.name = name;
  spec.horizon = cfg_in.episode_ticks;
  spec.gamma_tick = cfg_in.gamma;
  spec.action_names = {"handle_next_checkpoint", "respond_alarm"};
  spec.event_names = {"status", "alarm_spawn", "alarm_expire", "alarm_resolve", "checkpoint_done"};

  spec.initial = [env](Streams&) { return env->initial(); };
  spec.violation = [](const PatrolState& s, const InterventionSet& a) -> std::optional<AtomicAction> {
    if (a.size() > 1) return a.actions()[1];
    for (const auto& act : a) {
      if (act.id == kRespond && (!s.alarm || s.responding())) return act;
      if (act.id == kHandleNext && !s.responding()) return act;
      if (act.id != kRespond && act.id != kHandleNext) return act;
    }
    return std::nullopt;
  };
  spec.enumerate = [](const PatrolState& s) {
    std::vector<InterventionSet> menu{InterventionSet{}};
    if (s.responding()) {
      menu.push_back(InterventionSet::single(kHandleNext));
    } else if (s.alarm) {
      menu.push_back(InterventionSet::single(kRespond));
    }
    return menu;
  };
  spec.transition = [env](const PatrolState& s, const InterventionSet& a, Streams& rng) {
    return env->transition(s, a, rng.arrival);
  };
  spec.observe = [env](const PatrolState& s, Tick t, Streams&) { return env->observe(s, t); };
  spec.utility = [env](const PatrolState& s, const InterventionSet& a, Tick t) { return env->utility(s, a, t); };
  spec.boundary = [](const PatrolState& s) { return s.boundary; };
  spec.annotate = [env](const PatrolState& s) { return env->annotate(s); };
  spec.counters = [](const PatrolState& s) {
    return Counters{{"alarms", s.alarms},
                    {"resolved", s.resolved_count},
                    {"expired", s.expired_count},
                    {"active_at_horizon", s.alarm ? 1.0 : 0.0},
                    {"resolve_ticks", static_cast<double>(s.resolve_ticks_sum)},
                    {"checkpoints", s.checkpoints_done},
                    {"interruptions", s.interruptions}};
  };
  return spec;
}

inline ProcessSpec<PatrolState> module_level_env(const PatrolConfig& cfg) {
  if (!cfg.phases.empty()) throw std::invalid_argument("module-level patrol takes no phases");
  return make_env(cfg, "patrol-module");
}

inline ProcessSpec<PatrolState> state_level_env(const PatrolConfig& cfg, int depth) {
  if (static_cast<int>(cfg.phases.size()) != depth) {
    throw std::invalid_argument("state-level patrol: config has " + std::to_string(cfg.phases.size()) +
                                " phases, expected " + std::to_string(depth));
  }
  return make_env(cfg, "patrol-state-d" + std::to_string(depth));
}

// -- agent side --------------------------------------------------------------

// The latest status report, as seen by the upper-level controller.
struct View {
  Cell pos;
  Mode mode = Mode::handling;
  int phase = 0;
  int phase_remaining = 0;
  int phase_duration = 0;
  bool alarm = false;
  Cell alarm_pos;
  int deadline = 0;
  int target = 0;
  bool boundary = false;

  int distance() const { return manhattan(pos, alarm_pos); }
  double progress() const {
    return phase_duration > 0 ? static_cast<double>(phase_duration - phase_remaining) / phase_duration : 0.0;
  }
  bool responding() const { return mode == Mode::alarm_nav || mode == Mode::resolving; }
};

struct Extractor {
  using Info = View;

  static void absorb(View& v, const ObservationSet& y) {
    const auto* e = y.find(kStatus);
    if (!e) return;
    const auto& p = e->payload;
    v.pos = {static_cast<int>(p[0]), static_cast<int>(p[1])};
    v.mode = static_cast<Mode>(static_cast<int>(p[2]));
    v.phase = static_cast<int>(p[3]);
    v.phase_remaining = static_cast<int>(p[4]);
    v.phase_duration = static_cast<int>(p[5]);
    v.alarm = p[6] != 0.0;
    v.alarm_pos = {static_cast<int>(p[7]), static_cast<int>(p[8])};
    v.deadline = static_cast<int>(p[9]);
    v.target = static_cast<int>(p[10]);
    v.boundary = p[11] != 0.0;
  }
  View start(const ObservationSet& y0) const {
    View v;
    absorb(v, y0);
    return v;
  }
  void advance(View& v, const InterventionSet&, const ObservationSet& y, const UtilityList&, Tick) const {
    absorb(v, y);
  }
};

// Key: (mode/phase id, alarm present, deadline bucket of 4 ticks, distance
// bucket of 3 cells, phase-progress quartile).
struct Learning {
  using Info = View;
  static constexpr int kActions = 3;  // continue, handle_next_checkpoint, respond_alarm

  static std::vector<int> key(const View& v) {
    const int mode_id = v.mode == Mode::handling ? 3 + v.phase : static_cast<int>(v.mode);
    const int quartile = v.mode == Mode::handling ? std::min(3, static_cast<int>(v.progress() * 4.0)) : 0;
    if (!v.alarm) return {mode_id, 0, 0, 0, quartile};
    return {mode_id, 1, v.deadline / 4, v.distance() / 3, quartile};
  }
  static int action_index(const InterventionSet& a) {
    if (a.contains_id(kRespond)) return 2;
    if (a.contains_id(kHandleNext)) return 1;
    return 0;
  }
};

}  // namespace eplab::patrol
