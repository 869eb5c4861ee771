#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/core/process.hpp"

// Digital assistant: one long main task streamed token by token while emails
// arrive in the background. The interface decides when arrivals become
// visible and whether the main stream may be interrupted.
//
// One tick is one generated token. Interventions are ordered work plans that
// the environment executes front to back; while no work is queued and the
// focus is on the main task, the main stream advances one token per tick.

namespace eplab::assistant {

enum class Interface { agent_loop, periodic_poll, ep };
enum class Decomposition { single, milestones };
enum class Urgency { high = 0, medium = 1, low = 2 };

inline std::string to_string(Interface i) {
  switch (i) {
    case Interface::agent_loop: return "AgentLoop";
    case Interface::periodic_poll: return "PeriodicPoll";
    case Interface::ep: return "EP";
  }
  return "?";
}
inline std::string to_string(Decomposition d) { return d == Decomposition::single ? "single" : "milestones"; }

struct AssistantConfig {
  double horizon = 90.0;
  double arrival_rate = 0.2;
  double token_time_cost = 0.05;
  int main_target_units = 4;
  std::array<double, 3> urgency_probs{0.4, 0.4, 0.2};
  std::array<std::array<double, 2>, 3> slack_ranges{{{5.0, 15.0}, {15.0, 25.0}, {25.0, 35.0}}};
  double check_inbox = 0.1;
  double open = 0.1;
  double handle = 1.0;
  double reminder = 0.1;
  double return_to_main = 0.1;
  double triage = 0.2;
  double polling_interval = 15.0;
  Decomposition decomposition = Decomposition::milestones;
  int unit_tokens_lo = 160;  // per milestone unit
  int unit_tokens_hi = 240;
  double reminder_lead = 8.0;  // a deferred email resurfaces this long before its deadline

  void validate() const {
    for (double d : {horizon, token_time_cost, check_inbox, open, handle, reminder, return_to_main, triage,
                     polling_interval}) {
      if (!(d > 0.0)) throw std::invalid_argument("assistant: durations must be positive");
    }
    double sum = 0.0;
    for (double p : urgency_probs) {
      if (p < 0.0) throw std::invalid_argument("assistant: negative urgency probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("assistant: urgency probabilities must sum to 1");
    for (const auto& r : slack_ranges) {
      if (r[0] > r[1] || r[0] < 0.0) throw std::invalid_argument("assistant: bad slack range");
    }
    if (!(arrival_rate >= 0.0)) throw std::invalid_argument("assistant: negative arrival rate");
    if (main_target_units < 1) throw std::invalid_argument("assistant: main_target_units must be >= 1");
    if (unit_tokens_lo < 1 || unit_tokens_lo > unit_tokens_hi) throw std::invalid_argument("assistant: bad unit length range");
  }

  Tick ticks(double time_units) const { return static_cast<Tick>(std::llround(time_units / token_time_cost)); }
  Tick horizon_ticks() const { return ticks(horizon); }
};

enum Action : int { kCheckInbox = 0, kOpen = 1, kHandle = 2, kReminder = 3, kReturnToMain = 4, kTriage = 5 };
enum Event : int {
  kStatus = 0,
  kArrival = 1,   // pushed under EP
  kInbox = 2,     // one per listed email when an inbox check completes
  kChecked = 3,   // an inbox check completed
  kReminderDue = 4,
  kHandled = 5,
  kTimedOut = 6,
  kUnitDone = 7,
};

enum class Status { unseen, opened, handled, timed_out };

struct Email {
  int id = 0;
  Urgency urgency = Urgency::high;
  double arrival_time = 0.0;
  double deadline = 0.0;
  Tick arrival_tick = 0;
  Tick deadline_tick = 0;  // handled on time iff handling completes at a tick <= this
  Status status = Status::unseen;
  std::optional<Tick> visible_at;
  std::optional<Tick> first_response;  // start of the first open/handle
  std::optional<Tick> handled_at;
  std::optional<Tick> reminder_at;
  bool reminder_pending = false;  // fired but not yet delivered
};

struct Work {
  AtomicAction action;
  Tick remaining = 0;
  bool started = false;
  std::vector<int> listed;  // inbox check: ids captured when it started
  std::vector<int> due;     // parallel to listed
};

struct AssistantState {
  Interface interface = Interface::ep;
  Tick clock = 0;
  std::vector<int> unit_tokens;
  int unit = 0;
  int unit_done_tokens = 0;
  bool main_focus = true;
  bool streamed = false;  // main stream advanced on the last tick
  std::deque<Work> queue;
  std::vector<Email> emails;  // all of the episode's emails, arrived or not

  // what the last transition did
  bool drained = false;
  int units_completed_now = 0;
  bool main_completed_now = false;
  int on_time_now = 0, timeouts_now = 0, switches_now = 0, interruptions_now = 0;
  std::vector<int> checked_now;  // ids listed by an inbox check, if one completed
  std::vector<int> checked_due;  // parallel to checked_now: a deferred email's reminder has fired
  bool check_completed = false;
  std::vector<int> arrived_now, reminded_now, handled_now, timed_out_now;

  int switches = 0, interruptions = 0;

  int units_done() const { return unit; }
  bool main_done() const { return unit >= static_cast<int>(unit_tokens.size()); }
  bool mid_unit() const { return !main_done() && unit_done_tokens > 0; }
  bool arrived(const Email& e) const { return e.arrival_tick <= clock; }
  bool visible(const Email& e) const { return e.visible_at.has_value(); }
};

// Progress in target units: each completed unit is worth target / n_units.
inline double progress_units(const AssistantState& s, const AssistantConfig& cfg) {
  if (s.unit_tokens.empty()) return 0.0;
  return static_cast<double>(s.units_done()) * cfg.main_target_units / static_cast<double>(s.unit_tokens.size());
}

// -- scoring ----------------------------------------------------------------

struct Tally {
  double progress_units = 0.0;
  bool completed = false;
  int on_time = 0;
  int timeouts = 0;
  int switches = 0;
  int interruptions = 0;
};

inline double utility_score(const Tally& t) {
  return 0.4 * t.progress_units + 0.8 * (t.completed ? 1.0 : 0.0) + 0.4 * t.on_time - 0.5 * t.timeouts -
         0.005 * t.switches - 0.005 * t.interruptions;
}

inline constexpr std::array<double, 3> kUrgencyWeights{1.2, 0.5, 0.1};

struct EmailResult {
  Urgency urgency = Urgency::high;
  bool on_time = false;
};

inline double email_component(const std::vector<EmailResult>& emails) {
  if (emails.empty()) return 1.0;
  double num = 0.0, den = 0.0;
  for (const auto& e : emails) {
    const double w = kUrgencyWeights[static_cast<std::size_t>(e.urgency)];
    den += w;
    if (e.on_time) num += w;
  }
  return num / den;
}

inline double main_component(double progress, double target) {
  if (!(target > 0.0)) throw std::invalid_argument("main target must be positive");
  return std::min(1.0, progress / target);
}

inline double balanced_from_components(double main, double email) {
  return 0.6 * main + 0.4 * email - 0.5 * std::abs(main - email);
}

inline double balanced_score(double main_progress, double target, const std::vector<EmailResult>& emails) {
  return balanced_from_components(main_component(main_progress, target), email_component(emails));
}

namespace detail {

inline Tick duration_of(int id, const AssistantConfig& cfg) {
  switch (id) {
    case kCheckInbox: return cfg.ticks(cfg.check_inbox);
    case kOpen: return cfg.ticks(cfg.open);
    case kHandle: return cfg.ticks(cfg.handle);
    case kReminder: return cfg.ticks(cfg.reminder);
    case kReturnToMain: return cfg.ticks(cfg.return_to_main);
    case kTriage: return cfg.ticks(cfg.triage);
  }
  throw std::invalid_argument("unknown assistant action " + std::to_string(id));
}

inline bool email_focus_action(int id) { return id == kOpen || id == kHandle || id == kReminder || id == kTriage; }

struct Env {
  AssistantConfig cfg;
  Interface interface;

  AssistantState initial(Rng& rng) const {
    AssistantState s;
    s.interface = interface;
    const int unit = static_cast<int>(rng.uniform_int(cfg.unit_tokens_lo, cfg.unit_tokens_hi));
    if (cfg.decomposition == Decomposition::single) {
      s.unit_tokens = {unit * cfg.main_target_units};
    } else {
      s.unit_tokens.assign(static_cast<std::size_t>(cfg.main_target_units), unit);
    }
    double t = 0.0;
    while (cfg.arrival_rate > 0.0) {
      t += rng.exponential(cfg.arrival_rate);
      if (t >= cfg.horizon) break;
      Email e;
      e.id = static_cast<int>(s.emails.size());
      e.urgency = static_cast<Urgency>(rng.categorical(cfg.urgency_probs));
      const auto& r = cfg.slack_ranges[static_cast<std::size_t>(e.urgency)];
      e.arrival_time = t;
      e.deadline = t + rng.uniform(r[0], r[1]);
      e.arrival_tick = static_cast<Tick>(std::ceil(t / cfg.token_time_cost - 1e-9));
      e.deadline_tick = static_cast<Tick>(std::floor(e.deadline / cfg.token_time_cost + 1e-9));
      s.emails.push_back(e);
    }
    return s;
  }

  std::optional<AtomicAction> violation(const AssistantState& s, const InterventionSet& a) const {
    for (const auto& act : a) {
      switch (act.id) {
        case kCheckInbox:
        case kReturnToMain:
        case kTriage:
          if (act.arg != 0) return act;
          break;
        case kOpen:
        case kHandle:
        case kReminder: {
          if (act.arg < 0 || act.arg >= static_cast<std::int64_t>(s.emails.size())) return act;
          const Email& e = s.emails[static_cast<std::size_t>(act.arg)];
          if (!s.visible(e) || e.status == Status::handled) return act;
          break;
        }
        default:
          return act;
      }
    }
    return std::nullopt;
  }

  bool poll_point(const AssistantState& s) const {
    if (interface != Interface::periodic_poll || s.clock == 0) return false;
    return s.clock % cfg.ticks(cfg.polling_interval) == 0;
  }

  // Points at which a boundary-gated agent is consulted.
  bool boundary(const AssistantState& s) const {
    return s.queue.empty() && (!s.mid_unit() || s.drained);
  }

  // An email becomes visible when an inbox snapshot includes it (or on
  // arrival under EP).
  static void make_visible(Email& e, Tick at) {
    if (!e.visible_at) e.visible_at = at;
  }

  void start(AssistantState& n, Work& w) const {
    w.started = true;
    const int id = w.action.id;
    if (email_focus_action(id) && n.main_focus) {
      n.main_focus = false;
      ++n.switches;
      ++n.switches_now;
    }
    if (id == kOpen || id == kHandle) {
      Email& e = n.emails[static_cast<std::size_t>(w.action.arg)];
      if (!e.first_response) e.first_response = n.clock - 1;
    }
    if (id == kCheckInbox) {
      const Tick now = n.clock - 1;
      for (auto& e : n.emails) {
        if (e.arrival_tick > now || e.status == Status::handled || e.status == Status::timed_out) continue;
        make_visible(e, now);
        w.listed.push_back(e.id);
        w.due.push_back(e.reminder_pending ? 1 : 0);
        e.reminder_pending = false;
      }
    }
  }

  void finish(AssistantState& n, const Work& w) const {
    switch (w.action.id) {
      case kCheckInbox:
        n.check_completed = true;
        for (std::size_t i = 0; i < w.listed.size(); ++i) {
          const Email& e = n.emails[static_cast<std::size_t>(w.listed[i])];
          if (e.status == Status::handled || e.status == Status::timed_out) continue;
          n.checked_now.push_back(e.id);
          n.checked_due.push_back(w.due[i]);
        }
        break;
      case kOpen: {
        Email& e = n.emails[static_cast<std::size_t>(w.action.arg)];
        if (e.status == Status::unseen) e.status = Status::opened;
        break;
      }
      case kHandle: {
        Email& e = n.emails[static_cast<std::size_t>(w.action.arg)];
        if (e.status == Status::handled) break;
        const bool was_timed_out = e.status == Status::timed_out;
        e.status = Status::handled;
        e.handled_at = n.clock;
        n.handled_now.push_back(e.id);
        if (!was_timed_out && n.clock <= e.deadline_tick) ++n.on_time_now;
        break;
      }
      case kReminder: {
        Email& e = n.emails[static_cast<std::size_t>(w.action.arg)];
        e.reminder_at = std::max(n.clock + 1, e.deadline_tick - cfg.ticks(cfg.reminder_lead));
        break;
      }
      case kReturnToMain:
        if (!n.main_focus) {
          n.main_focus = true;
          ++n.switches;
          ++n.switches_now;
        }
        break;
    }
  }

  AssistantState transition(const AssistantState& s, const InterventionSet& a) const {
    AssistantState n = s;
    n.clock = s.clock + 1;
    n.drained = false;
    n.units_completed_now = 0;
    n.main_completed_now = false;
    n.on_time_now = n.timeouts_now = n.switches_now = n.interruptions_now = 0;
    n.check_completed = false;
    n.checked_now.clear();
    n.checked_due.clear();
    n.arrived_now.clear();
    n.reminded_now.clear();
    n.handled_now.clear();
    n.timed_out_now.clear();

    if (!a.empty()) {
      // A new plan supersedes a trailing return that has not started yet.
      if (!n.queue.empty() && !n.queue.back().started && n.queue.back().action.id == kReturnToMain) n.queue.pop_back();
      for (const auto& act : a) n.queue.push_back({act, duration_of(act.id, cfg), false, {}, {}});
    }
    // Scheduled polls snapshot the inbox ahead of any queued work; an action
    // in progress resumes afterwards.
    if (poll_point(s)) n.queue.push_front({{kCheckInbox, 0}, duration_of(kCheckInbox, cfg), false, {}, {}});

    bool streamed = false;
    if (!n.queue.empty()) {
      Work& w = n.queue.front();
      if (!w.started) start(n, w);
      if (--w.remaining == 0) {
        const Work done = w;
        n.queue.pop_front();
        finish(n, done);
        if (n.queue.empty()) n.drained = true;
      }
    } else if (n.main_focus && !n.main_done()) {
      streamed = true;
      if (++n.unit_done_tokens == n.unit_tokens[static_cast<std::size_t>(n.unit)]) {
        ++n.unit;
        n.unit_done_tokens = 0;
        ++n.units_completed_now;
        if (n.main_done()) n.main_completed_now = true;
      }
    }
    if (s.streamed && !streamed && n.mid_unit()) {
      ++n.interruptions;
      ++n.interruptions_now;
    }
    n.streamed = streamed;

    for (auto& e : n.emails) {
      if (e.arrival_tick == n.clock) {
        n.arrived_now.push_back(e.id);
        if (interface == Interface::ep) make_visible(e, n.clock);
      }
      if (e.status != Status::handled && e.status != Status::timed_out && n.clock > e.deadline_tick) {
        e.status = Status::timed_out;
        ++n.timeouts_now;
        n.timed_out_now.push_back(e.id);
      }
      if (e.reminder_at && *e.reminder_at == n.clock && e.status != Status::handled && e.status != Status::timed_out) {
        if (interface == Interface::ep) {
          n.reminded_now.push_back(e.id);
        } else {
          e.reminder_pending = true;
        }
      }
    }
    // Arrivals at tick 0 are handled here too, so every email is seen by the
    // loop above exactly once per tick after its arrival.
    return n;
  }

  // The transition draws no randomness, so u_t can be read off the effects
  // of executing A_t from s_t.
  UtilityList utility(const AssistantState& before, const InterventionSet& a, Tick t) const {
    const AssistantState s = transition(before, a);
    UtilityList us;
    const double unit_value = s.unit_tokens.empty()
                                  ? 0.0
                                  : static_cast<double>(cfg.main_target_units) / static_cast<double>(s.unit_tokens.size());
    if (s.units_completed_now) us.push_back({0.4 * unit_value * s.units_completed_now, t, UtilityTag::task_reward});
    if (s.main_completed_now) us.push_back({0.8, t, UtilityTag::task_reward});
    if (s.on_time_now) us.push_back({0.4 * s.on_time_now, t, UtilityTag::task_reward});
    if (s.timeouts_now) us.push_back({-0.5 * s.timeouts_now, t, UtilityTag::penalty});
    if (s.switches_now) us.push_back({-0.005 * s.switches_now, t, UtilityTag::switch_cost});
    if (s.interruptions_now) us.push_back({-0.005 * s.interruptions_now, t, UtilityTag::interrupt_cost});
    return us;
  }

  // [id, urgency, deadline_tick, arrival_tick, status, reminder_due]
  static std::vector<double> email_payload(const Email& e, bool due = false) {
    return {static_cast<double>(e.id), static_cast<double>(static_cast<int>(e.urgency)),
            static_cast<double>(e.deadline_tick), static_cast<double>(e.arrival_tick),
            static_cast<double>(static_cast<int>(e.status)), due ? 1.0 : 0.0};
  }

  ObservationSet observe(const AssistantState& s, Tick t) const {
    ObservationSet y;
    Tick queued = 0;
    for (const auto& w : s.queue) queued += w.remaining;
    y.emit(kStatus, t,
           {static_cast<double>(queued), s.main_focus ? 1.0 : 0.0, s.mid_unit() ? 1.0 : 0.0, s.main_done() ? 1.0 : 0.0,
            static_cast<double>(s.units_done())});
    if (interface == Interface::ep) {
      for (const auto& e : s.emails) {
        if (e.arrival_tick == t) y.emit(kArrival, t, email_payload(e));
      }
      for (int id : s.reminded_now) y.emit(kReminderDue, t, email_payload(s.emails[static_cast<std::size_t>(id)], true));
    }
    if (s.check_completed) {
      for (std::size_t i = 0; i < s.checked_now.size(); ++i) {
        y.emit(kInbox, t, email_payload(s.emails[static_cast<std::size_t>(s.checked_now[i])], s.checked_due[i] != 0));
      }
      y.emit(kChecked, t, {static_cast<double>(s.checked_now.size())});
    }
    for (int id : s.handled_now) y.emit(kHandled, t, {static_cast<double>(id)});
    for (int id : s.timed_out_now) y.emit(kTimedOut, t, {static_cast<double>(id)});
    if (s.units_completed_now) y.emit(kUnitDone, t, {static_cast<double>(s.units_done())});
    return y;
  }

  Annotation annotate(const AssistantState& s) const {
    Annotation a;
    a["clock"] = static_cast<double>(s.clock) * cfg.token_time_cost;
    a["unit"] = s.unit;
    a["unit_tokens"] = s.unit_done_tokens;
    a["focus"] = s.main_focus ? "main" : "email";
    Annotation q = Annotation::array();
    for (const auto& w : s.queue) q.push_back({w.action.id, w.action.arg, w.remaining});
    a["queue"] = std::move(q);
    int visible = 0;
    for (const auto& e : s.emails) {
      if (s.arrived(e) && s.visible(e) && e.status != Status::handled && e.status != Status::timed_out) ++visible;
    }
    a["pending_visible"] = visible;
    return a;
  }

  Counters counters(const AssistantState& s) const {
    Counters c;
    const Tick horizon = cfg.horizon_ticks();
    int arrived = 0, on_time = 0, timeouts = 0, handled = 0, responded = 0, visible = 0;
    double latency = 0.0, delay = 0.0;
    std::array<double, 3> weight_total{}, weight_on_time{};
    for (const auto& e : s.emails) {
      if (e.arrival_tick > s.clock) continue;
      ++arrived;
      const auto u = static_cast<std::size_t>(e.urgency);
      weight_total[u] += kUrgencyWeights[u];
      const bool ok = e.handled_at && *e.handled_at <= e.deadline_tick;
      if (ok) {
        ++on_time;
        weight_on_time[u] += kUrgencyWeights[u];
      }
      if (e.status == Status::timed_out || (e.handled_at && *e.handled_at > e.deadline_tick)) ++timeouts;
      if (e.handled_at) ++handled;
      if (e.first_response) {
        ++responded;
        latency += static_cast<double>(*e.first_response - e.arrival_tick) * cfg.token_time_cost;
      }
      const Tick seen = e.visible_at ? *e.visible_at : std::max(horizon, s.clock);
      if (e.visible_at) ++visible;
      delay += static_cast<double>(seen - e.arrival_tick) * cfg.token_time_cost;
    }
    const double progress = progress_units(s, cfg);
    c["emails"] = arrived;
    c["on_time"] = on_time;
    c["timeouts"] = timeouts;
    c["handled"] = handled;
    c["responded"] = responded;
    c["visible"] = visible;
    c["latency_sum"] = latency;
    c["visibility_delay_sum"] = delay;
    c["switches"] = s.switches;
    c["interruptions"] = s.interruptions;
    c["progress_units"] = progress;
    c["main_completed"] = s.main_done() ? 1.0 : 0.0;
    c["main_score"] = main_component(progress, cfg.main_target_units);
    double wt = 0.0, wo = 0.0;
    for (std::size_t u = 0; u < 3; ++u) {
      wt += weight_total[u];
      wo += weight_on_time[u];
    }
    c["email_weight_total"] = wt;
    c["email_weight_on_time"] = wo;
    const double email = arrived == 0 ? 1.0 : wo / wt;
    c["email_score"] = email;
    c["balanced"] = balanced_from_components(c["main_score"], email);
    c["utility"] = utility_score({progress, s.main_done(), on_time, timeouts, s.switches, s.interruptions});
    return c;
  }
};

}  // namespace detail

inline ProcessSpec<AssistantState> make_env(const AssistantConfig& cfg, Interface interface) {
  cfg.validate();
  auto env = std::make_shared<const detail::Env>(detail::Env{cfg, interface});
  ProcessSpec<AssistantState> spec;
  spec.name = "assistant-" + to_string(cfg.decomposition) + "-" + to_string(interface);
  spec.horizon = cfg.horizon_ticks();
  spec.gamma_tick = 1.0;
  spec.action_names = {"check_inbox", "open", "handle", "set_reminder", "return_to_main", "triage"};
  spec.event_names = {"status", "arrival", "inbox", "checked", "reminder", "handled", "timed_out", "unit_done"};
  spec.initial = [env](Streams& rng) { return env->initial(rng.arrival); };
  spec.violation = [env](const AssistantState& s, const InterventionSet& a) { return env->violation(s, a); };
  // The set space is every ordered plan over visible emails; only the
  // continuation is listed.
  spec.enumerate = [](const AssistantState&) { return std::vector<InterventionSet>{InterventionSet{}}; };
  spec.transition = [env](const AssistantState& s, const InterventionSet& a, Streams&) { return env->transition(s, a); };
  spec.observe = [env](const AssistantState& s, Tick t, Streams&) { return env->observe(s, t); };
  spec.utility = [env](const AssistantState& s, const InterventionSet& a, Tick t) { return env->utility(s, a, t); };
  spec.boundary = [env](const AssistantState& s) { return env->boundary(s); };
  spec.annotate = [env](const AssistantState& s) { return env->annotate(s); };
  spec.counters = [env](const AssistantState& s) { return env->counters(s); };
  return spec;
}

// -- agent side --------------------------------------------------------------

struct KnownEmail {
  int id = 0;
  Urgency urgency = Urgency::high;
  Tick deadline_tick = 0;
  Tick arrival_tick = 0;
  bool opened = false;
  bool handled = false;
  bool timed_out = false;
  bool reminder_due = false;
};

struct View {
  Tick now = 0;
  std::vector<KnownEmail> emails;  // by id order of discovery
  Tick queued_ticks = 0;
  bool main_focus = true;
  bool mid_unit = false;
  bool main_done = false;
  bool checked_now = false;  // an inbox check completed on this tick

  KnownEmail* find(int id) {
    for (auto& e : emails) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }
};

struct Extractor {
  using Info = View;

  static void learn(View& v, const ObservationEvent& e) {
    const int id = static_cast<int>(e.payload[0]);
    KnownEmail* k = v.find(id);
    if (!k) {
      v.emails.push_back({id, static_cast<Urgency>(static_cast<int>(e.payload[1])),
                          static_cast<Tick>(e.payload[2]), static_cast<Tick>(e.payload[3])});
      k = &v.emails.back();
    }
    k->opened = static_cast<Status>(static_cast<int>(e.payload[4])) != Status::unseen;
    if (e.payload[5] != 0.0) k->reminder_due = true;
  }

  static void absorb(View& v, const ObservationSet& y, Tick t) {
    v.now = t;
    v.checked_now = false;
    for (const auto& e : y.events) {
      switch (e.id) {
        case kStatus:
          v.queued_ticks = static_cast<Tick>(e.payload[0]);
          v.main_focus = e.payload[1] != 0.0;
          v.mid_unit = e.payload[2] != 0.0;
          v.main_done = e.payload[3] != 0.0;
          break;
        case kArrival:
        case kInbox:
        case kReminderDue: learn(v, e); break;
        case kChecked: v.checked_now = true; break;
        case kHandled:
          if (auto* k = v.find(static_cast<int>(e.payload[0]))) k->handled = true;
          break;
        case kTimedOut:
          if (auto* k = v.find(static_cast<int>(e.payload[0]))) k->timed_out = true;
          break;
        default: break;
      }
    }
  }

  View start(const ObservationSet& y0) const {
    View v;
    absorb(v, y0, 0);
    return v;
  }
  void advance(View& v, const InterventionSet&, const ObservationSet& y, const UtilityList&, Tick t) const {
    absorb(v, y, t);
  }
};

// Deterministic stand-in for a triage model: earliest deadline first, higher
// urgency first on ties; emails that can no longer be handled in time are
// skipped; while the main task is unfinished, emails with plenty of slack
// are deferred with a reminder.
struct ScriptedTriage {
  double defer_slack = 20.0;  // time units of slack beyond which an email is deferred

  struct Item {
    int id;
    Urgency urgency;
    Tick deadline_tick;
    bool opened;
    bool may_defer;
  };

  std::vector<AtomicAction> plan(std::vector<Item> items, Tick now, bool main_done, const AssistantConfig& cfg) const {
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      if (a.deadline_tick != b.deadline_tick) return a.deadline_tick < b.deadline_tick;
      if (a.urgency != b.urgency) return static_cast<int>(a.urgency) < static_cast<int>(b.urgency);
      return a.id < b.id;
    });
    std::vector<AtomicAction> out{{kTriage, 0}};
    Tick t = now + cfg.ticks(cfg.triage);
    const Tick defer = cfg.ticks(defer_slack);
    for (const auto& it : items) {
      const Tick cost = (it.opened ? 0 : cfg.ticks(cfg.open)) + cfg.ticks(cfg.handle);
      if (t + cost > it.deadline_tick) continue;
      if (!main_done && it.may_defer && it.deadline_tick - (t + cost) > defer) {
        out.push_back({kReminder, it.id});
        t += cfg.ticks(cfg.reminder);
        continue;
      }
      if (!it.opened) out.push_back({kOpen, it.id});
      out.push_back({kHandle, it.id});
      t += cost;
    }
    if (!main_done) out.push_back({kReturnToMain, 0});
    return out;
  }
};

// Scripted assistant agent. EP reacts to pushed events at any tick; the loop
// interfaces act only at their consultation points, where they check the
// inbox first and then work through what it listed.
class ScriptedAgent {
 public:
  using Info = View;

  ScriptedAgent(Interface interface, AssistantConfig cfg, ScriptedTriage triage = {})
      : interface_(interface), cfg_(std::move(cfg)), triage_(triage) {}

  DecisionGate gate() const {
    return interface_ == Interface::ep ? DecisionGate::every_tick : DecisionGate::boundary_only;
  }

  InterventionSet decide(const View& v, std::span<const InterventionSet>, Tick t, Rng&) {
    if (interface_ != Interface::ep && !checked_ && !v.checked_now) {
      checked_ = true;
      return InterventionSet::single(kCheckInbox);
    }
    std::vector<ScriptedTriage::Item> items;
    for (const auto& e : v.emails) {
      if (e.handled || e.timed_out) continue;
      const bool seen_before = triaged_.size() > static_cast<std::size_t>(e.id) && triaged_[static_cast<std::size_t>(e.id)];
      if (seen_before && !e.reminder_due) continue;
      if (seen_before && e.reminder_due && reminded_.size() > static_cast<std::size_t>(e.id) &&
          reminded_[static_cast<std::size_t>(e.id)]) {
        continue;
      }
      items.push_back({e.id, e.urgency, e.deadline_tick, e.opened, !seen_before});
    }
    checked_ = false;
    if (items.empty()) return {};
    for (const auto& it : items) {
      mark(triaged_, it.id);
      if (!it.may_defer) mark(reminded_, it.id);
    }
    InterventionSet plan;
    for (const auto& a : triage_.plan(items, t + v.queued_ticks, v.main_done, cfg_)) plan.insert(a);
    return plan;
  }

 private:
  static void mark(std::vector<bool>& flags, int id) {
    if (flags.size() <= static_cast<std::size_t>(id)) flags.resize(static_cast<std::size_t>(id) + 1, false);
    flags[static_cast<std::size_t>(id)] = true;
  }

  Interface interface_;
  AssistantConfig cfg_;
  ScriptedTriage triage_;
  bool checked_ = false;
  std::vector<bool> triaged_;
  std::vector<bool> reminded_;
};

inline EpisodeTrace simulate_assistant(const AssistantConfig& cfg, Interface interface, const ScriptedTriage& triage,
                                       std::uint64_t seed, RunOptions opts = {}) {
  const auto env = make_env(cfg, interface);
  ScriptedAgent agent(interface, cfg, triage);
  return run_episode(env, agent, Extractor{}, seed, opts);
}

inline Tally tally_of(const EpisodeTrace& trace) {
  const auto& c = trace.counters;
  return {counter(c, "progress_units"), counter(c, "main_completed") != 0.0, static_cast<int>(counter(c, "on_time")),
          static_cast<int>(counter(c, "timeouts")), static_cast<int>(counter(c, "switches")),
          static_cast<int>(counter(c, "interruptions"))};
}

inline double utility_score(const EpisodeTrace& trace) { return utility_score(tally_of(trace)); }

}  // namespace eplab::assistant
