#pragma once

#include <cmath>
#include <concepts>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eplab/core/rng.hpp"
#include "eplab/core/types.hpp"

namespace eplab {

using Annotation = nlohmann::json;

// Tabulated-by-function description of an engagement process over states of
// type `State`. Transition, observation and utility kernels must be
// deterministic given the random stream they are handed.
template <class State>
struct ProcessSpec {
  std::string name;
  Tick horizon = 0;
  double gamma_tick = 1.0;

  // Display names, indexed by AtomicAction::id and ObservationEvent::id.
  std::vector<std::string> action_names;
  std::vector<std::string> event_names;

  std::function<State(Streams&)> initial;

  // Admissibility predicate over the intervention-set space. Returns the
  // first offending action (id -1 for a disallowed empty set), or nullopt.
  std::function<std::optional<AtomicAction>(const State&, const InterventionSet&)> violation;

  // Enumerator over the admissible sets at a state. Environments whose
  // intervention-set space is too large to list return the singleton menu.
  std::function<std::vector<InterventionSet>(const State&)> enumerate;

  std::function<State(const State&, const InterventionSet&, Streams&)> transition;
  std::function<ObservationSet(const State&, Tick, Streams&)> observe;
  std::function<UtilityList(const State&, const InterventionSet&, Tick)> utility;

  // Optional hooks.
  std::function<bool(const State&)> terminal;
  std::function<bool(const State&)> boundary;
  std::function<Annotation(const State&)> annotate;
  std::function<Counters(const State&)> counters;

  std::string action_name(int id) const {
    if (id >= 0 && static_cast<std::size_t>(id) < action_names.size()) return action_names[id];
    return std::to_string(id);
  }
  std::string event_name(int id) const {
    if (id >= 0 && static_cast<std::size_t>(id) < event_names.size()) return event_names[id];
    return std::to_string(id);
  }
};

template <class State>
struct StepResult {
  State next;
  ObservationSet observations;
  UtilityList utilities;
};

// One tick: u_t from (s_t, A_t), then s_{t+1} ~ F(.|s_t, A_t), then
// Y_{t+1} ~ O(.|s_{t+1}).
template <class State>
StepResult<State> step(const ProcessSpec<State>& spec, const State& state,
                       const InterventionSet& interventions, Streams& streams, Tick tick) {
  if (auto bad = spec.violation(state, interventions)) {
    const std::string label = bad->id < 0 ? std::string("{}") : spec.action_name(bad->id);
    throw InadmissibleIntervention(bad->id, tick,
                                   spec.name + ": inadmissible action " + label + " at tick " +
                                       std::to_string(tick));
  }
  UtilityList utilities = spec.utility(state, interventions, tick);
  State next = spec.transition(state, interventions, streams);
  ObservationSet obs = spec.observe(next, tick + 1, streams);
  return {std::move(next), std::move(obs), std::move(utilities)};
}

// J = sum_t gamma^t u_t.
inline double discounted_return(std::span<const double> utilities, double gamma_tick) {
  double total = 0.0;
  double weight = 1.0;
  for (double u : utilities) {
    total += weight * u;
    weight *= gamma_tick;
  }
  return total;
}

inline double utility_sum(const UtilityList& us) {
  double s = 0.0;
  for (const auto& u : us) s += u.value;
  return s;
}

// -- episodes ---------------------------------------------------------------

enum class DecisionGate { every_tick, boundary_only };

struct TickRecord {
  Tick tick = 0;
  bool consulted = false;
  Annotation annotation;          // s_t, when recorded
  ObservationSet observations;    // Y_t
  InterventionSet interventions;  // A_t
  UtilityList utilities;          // u_t

  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

struct EpisodeTrace {
  std::string env;
  std::uint64_t seed = 0;
  double gamma_tick = 1.0;
  std::vector<std::string> action_names;
  std::vector<std::string> event_names;

  std::vector<TickRecord> ticks;  // empty unless recording
  Annotation final_annotation;
  ObservationSet final_observations;

  Tick length = 0;
  double discounted_return = 0.0;
  double total_return = 0.0;  // undiscounted
  TagSums tag_sums{};
  Counters counters;

  friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

// Agent-side interaction history h_t: one entry per elapsed tick holding
// (A_k, Y_{k+1}, u_k), plus the observations present at tick 0.
struct History {
  struct Record {
    InterventionSet interventions;
    ObservationSet observations;
    UtilityList utilities;
  };
  ObservationSet initial;
  std::vector<Record> records;

  Tick elapsed() const { return static_cast<Tick>(records.size()); }
};

// An information-state extractor is a left fold over the history, so
// w_t = phi(h_t, t) is computed incrementally.
template <class X>
concept InformationExtractor = requires(const X& x, typename X::Info& w, const ObservationSet& y,
                                        const InterventionSet& a, const UtilityList& u, Tick t) {
  { x.start(y) } -> std::same_as<typename X::Info>;
  x.advance(w, a, y, u, t);
};

// phi = identity: the information state is the full history.
struct FullHistoryExtractor {
  using Info = History;
  Info start(const ObservationSet& y0) const { return History{y0, {}}; }
  void advance(Info& w, const InterventionSet& a, const ObservationSet& y, const UtilityList& u,
               Tick) const {
    w.records.push_back({a, y, u});
  }
};

template <class P, class Info>
concept EpisodePolicy = requires(P& p, const Info& w, std::span<const InterventionSet> menu,
                                 Tick t, Rng& rng) {
  { p.gate() } -> std::convertible_to<DecisionGate>;
  { p.decide(w, menu, t, rng) } -> std::convertible_to<InterventionSet>;
};

struct RunOptions {
  bool record = true;  // keep per-tick records and annotations
};

class EpisodeAborted : public std::runtime_error {
 public:
  EpisodeAborted(Tick tick, const std::string& what) : std::runtime_error(what), tick_(tick) {}
  Tick tick() const { return tick_; }

 private:
  Tick tick_;
};

// Runs one episode. The policy is consulted only at ticks its gate admits;
// elsewhere the empty (continuation) set is applied.
template <class State, InformationExtractor X, class P>
  requires EpisodePolicy<P, typename X::Info>
EpisodeTrace run_episode(const ProcessSpec<State>& spec, P& policy, const X& phi, std::uint64_t seed,
                         RunOptions opts = {}) {
  EpisodeTrace trace;
  trace.env = spec.name;
  trace.seed = seed;
  trace.gamma_tick = spec.gamma_tick;
  trace.action_names = spec.action_names;
  trace.event_names = spec.event_names;

  Streams streams(seed);
  State state = spec.initial(streams);
  ObservationSet obs = spec.observe(state, 0, streams);
  auto info = phi.start(obs);

  const DecisionGate gate = policy.gate();
  double weight = 1.0;
  Tick t = 0;
  std::vector<InterventionSet> menu;
  for (; t < spec.horizon; ++t) {
    if (spec.terminal && spec.terminal(state)) break;

    const bool consult =
        gate == DecisionGate::every_tick || (spec.boundary && spec.boundary(state));
    InterventionSet action;
    if (consult) {
      menu.clear();
      if (spec.enumerate) menu = spec.enumerate(state);
      action = policy.decide(info, std::span<const InterventionSet>(menu), t, streams.policy);
    }

    StepResult<State> r;
    try {
      r = step(spec, state, action, streams, t);
    } catch (const InadmissibleIntervention& e) {
      throw EpisodeAborted(t, std::string("episode aborted: ") + e.what());
    }

    const double tick_sum = utility_sum(r.utilities);
    trace.discounted_return += weight * tick_sum;
    trace.total_return += tick_sum;
    for (const auto& u : r.utilities) trace.tag_sums[static_cast<std::size_t>(u.tag)] += u.value;
    weight *= spec.gamma_tick;

    if (opts.record) {
      TickRecord rec;
      rec.tick = t;
      rec.consulted = consult;
      if (spec.annotate) rec.annotation = spec.annotate(state);
      rec.observations = std::move(obs);
      rec.interventions = action;
      rec.utilities = r.utilities;
      trace.ticks.push_back(std::move(rec));
    }

    phi.advance(info, action, r.observations, r.utilities, t + 1);
    if constexpr (requires { policy.after_step(info, r.utilities, t + 1); }) {
      policy.after_step(info, r.utilities, t + 1);
    }
    state = std::move(r.next);
    obs = std::move(r.observations);
  }
  if constexpr (requires { policy.end_episode(info); }) {
    policy.end_episode(info);
  }

  trace.length = t;
  if (opts.record) {
    if (spec.annotate) trace.final_annotation = spec.annotate(state);
    trace.final_observations = std::move(obs);
  }
  if (spec.counters) trace.counters = spec.counters(state);
  return trace;
}

// Rebuilds h_T from a recorded trace.
inline History history_of(const EpisodeTrace& trace) {
  History h;
  if (trace.ticks.empty()) {
    h.initial = trace.final_observations;
    return h;
  }
  h.initial = trace.ticks.front().observations;
  for (std::size_t i = 0; i < trace.ticks.size(); ++i) {
    const auto& rec = trace.ticks[i];
    const ObservationSet& next =
        i + 1 < trace.ticks.size() ? trace.ticks[i + 1].observations : trace.final_observations;
    h.records.push_back({rec.interventions, next, rec.utilities});
  }
  return h;
}

}  // namespace eplab
