#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "eplab/envs/patrol.hpp"

// Hand-written interruption rules for state-level patrol. Both are pure
// functions of the controller's view and consulted every tick.

namespace eplab::agents {

enum class PatrolDecision { keep_going, respond };

// Patch: current phase plus remaining alarm time only. Returns the largest
// alarm deadline at which the phase is interrupted; nullopt means never.
inline std::optional<int> patch_respond_limit(int depth, patrol::PhaseKind kind) {
  using patrol::PhaseKind;
  constexpr int always = std::numeric_limits<int>::max();
  switch (kind) {
    case PhaseKind::observe: return always;
    case PhaseKind::verify: return depth == 3 ? std::optional<int>(8) : std::nullopt;
    case PhaseKind::commit: return depth == 2 ? std::optional<int>(6) : std::nullopt;
    case PhaseKind::handle: return std::nullopt;
  }
  return std::nullopt;
}

inline PatrolDecision patch_policy(const patrol::View& v, int depth, const std::vector<patrol::PhaseSpec>& phases) {
  using patrol::Mode;
  if (!v.alarm || v.responding()) return PatrolDecision::keep_going;
  if (v.mode == Mode::patrol_nav) return PatrolDecision::respond;
  const auto limit = patch_respond_limit(depth, phases.at(static_cast<std::size_t>(v.phase)).kind);
  return limit && v.deadline <= *limit ? PatrolDecision::respond : PatrolDecision::keep_going;
}

struct PhaseThreshold {
  int urgency_ticks = 0;
  double progress_cutoff = 0.0;
  double cost_ratio = 0.0;
};

struct PatchProThresholds {
  std::map<std::pair<int, patrol::PhaseKind>, PhaseThreshold> table;
  int very_urgent_ticks = 3;
  double net_alarm_value = 45.0;  // resolve reward minus expire penalty

  static PatchProThresholds defaults() {
    using patrol::PhaseKind;
    PatchProThresholds t;
    t.table[{2, PhaseKind::observe}] = {16, 1.0, 2.0};
    t.table[{2, PhaseKind::commit}] = {8, 0.5, 3.5};
    t.table[{3, PhaseKind::observe}] = {18, 1.0, 2.0};
    t.table[{3, PhaseKind::verify}] = {12, 0.8, 3.0};
    t.table[{3, PhaseKind::commit}] = {8, 0.5, 4.5};
    return t;
  }

  void validate() const {
    if (very_urgent_ticks < 0 || net_alarm_value < 0.0) throw std::invalid_argument("PatchPro: negative constant");
    for (const auto& [k, th] : table) {
      if (th.urgency_ticks < 0 || th.progress_cutoff < 0.0 || th.cost_ratio < 0.0) {
        throw std::invalid_argument("PatchPro: negative threshold");
      }
    }
  }
};

// Checks in order: reachability, very urgent, patrol navigation,
// finish-first, then the phase thresholds (all three must hold).
inline PatrolDecision patchpro_policy(const patrol::View& v, int depth, const std::vector<patrol::PhaseSpec>& phases,
                                      int resolve_ticks, const PatchProThresholds& thr) {
  using patrol::Mode;
  if (!v.alarm || v.responding()) return PatrolDecision::keep_going;
  const int reach = v.distance() + resolve_ticks;
  if (reach > v.deadline) return PatrolDecision::keep_going;
  if (v.deadline <= thr.very_urgent_ticks) return PatrolDecision::respond;
  if (v.mode == Mode::patrol_nav) return PatrolDecision::respond;
  if (v.phase_remaining + reach <= v.deadline) return PatrolDecision::keep_going;
  const auto& phase = phases.at(static_cast<std::size_t>(v.phase));
  auto it = thr.table.find({depth, phase.kind});
  if (it == thr.table.end()) return PatrolDecision::keep_going;
  const auto& th = it->second;
  const bool urgent = v.deadline <= th.urgency_ticks;
  const bool early = v.progress() < th.progress_cutoff;
  const bool worth_it = thr.net_alarm_value >= th.cost_ratio * std::abs(phase.interrupt_cost);
  return urgent && early && worth_it ? PatrolDecision::respond : PatrolDecision::keep_going;
}

inline InterventionSet to_intervention(PatrolDecision d) {
  return d == PatrolDecision::respond ? InterventionSet::single(patrol::kRespond) : InterventionSet{};
}

struct PatchAgent {
  using Info = patrol::View;
  int depth;
  std::vector<patrol::PhaseSpec> phases;

  DecisionGate gate() const { return DecisionGate::every_tick; }
  InterventionSet decide(const Info& v, std::span<const InterventionSet>, Tick, Rng&) const {
    return to_intervention(patch_policy(v, depth, phases));
  }
};

struct PatchProAgent {
  using Info = patrol::View;
  int depth;
  std::vector<patrol::PhaseSpec> phases;
  int resolve_ticks;
  PatchProThresholds thresholds = PatchProThresholds::defaults();

  DecisionGate gate() const { return DecisionGate::every_tick; }
  InterventionSet decide(const Info& v, std::span<const InterventionSet>, Tick, Rng&) const {
    return to_intervention(patchpro_policy(v, depth, phases, resolve_ticks, thresholds));
  }
};

}  // namespace eplab::agents
