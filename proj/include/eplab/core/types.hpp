#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eplab {

// Discrete time index. Episodes start at tick 0.
using Tick = std::int64_t;

// One atomic action. Identity is the (id, arg) pair; `arg` carries the
// environment-specific parameter (an email id, a target index, ...).
struct AtomicAction {
  int id = 0;
  std::int64_t arg = 0;

  friend bool operator==(const AtomicAction&, const AtomicAction&) = default;
  friend auto operator<=>(const AtomicAction&, const AtomicAction&) = default;
};

// A finite set of atomic actions triggered at one tick. Insertion order is
// kept because some environments execute the set as an ordered work plan.
class InterventionSet {
 public:
  InterventionSet() = default;
  InterventionSet(std::initializer_list<AtomicAction> actions) {
    for (const auto& a : actions) insert(a);
  }

  static InterventionSet single(int id, std::int64_t arg = 0) {
    InterventionSet s;
    s.actions_.push_back({id, arg});
    return s;
  }

  // Throws std::invalid_argument on a duplicate action.
  void insert(AtomicAction a) {
    if (contains(a)) {
      throw std::invalid_argument("duplicate atomic action id " + std::to_string(a.id));
    }
    actions_.push_back(a);
  }

  bool contains(const AtomicAction& a) const {
    for (const auto& x : actions_) {
      if (x == a) return true;
    }
    return false;
  }
  bool contains_id(int id) const {
    for (const auto& x : actions_) {
      if (x.id == id) return true;
    }
    return false;
  }

  bool empty() const { return actions_.empty(); }
  std::size_t size() const { return actions_.size(); }
  const std::vector<AtomicAction>& actions() const { return actions_; }
  auto begin() const { return actions_.begin(); }
  auto end() const { return actions_.end(); }

  friend bool operator==(const InterventionSet&, const InterventionSet&) = default;

 private:
  std::vector<AtomicAction> actions_;
};

struct ObservationEvent {
  int id = 0;
  Tick emitted_at = 0;
  std::vector<double> payload;

  friend bool operator==(const ObservationEvent&, const ObservationEvent&) = default;
};

// All events generated from the state at one tick; possibly empty.
struct ObservationSet {
  std::vector<ObservationEvent> events;

  bool empty() const { return events.empty(); }
  std::size_t size() const { return events.size(); }
  void emit(int id, Tick at, std::vector<double> payload = {}) {
    events.push_back({id, at, std::move(payload)});
  }
  const ObservationEvent* find(int id) const {
    for (const auto& e : events) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }

  friend bool operator==(const ObservationSet&, const ObservationSet&) = default;
};

enum class UtilityTag : int {
  task_reward = 0,
  penalty,
  time_cost,
  interrupt_cost,
  switch_cost,
  other,
};
inline constexpr std::size_t kUtilityTagCount = 6;

inline std::string_view to_string(UtilityTag tag) {
  switch (tag) {
    case UtilityTag::task_reward: return "task_reward";
    case UtilityTag::penalty: return "penalty";
    case UtilityTag::time_cost: return "time_cost";
    case UtilityTag::interrupt_cost: return "interrupt_cost";
    case UtilityTag::switch_cost: return "switch_cost";
    case UtilityTag::other: return "other";
  }
  return "other";
}

inline std::optional<UtilityTag> utility_tag_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kUtilityTagCount; ++i) {
    auto tag = static_cast<UtilityTag>(i);
    if (to_string(tag) == s) return tag;
  }
  return std::nullopt;
}

struct UtilityEvent {
  double value = 0.0;
  Tick tick = 0;
  UtilityTag tag = UtilityTag::other;

  friend bool operator==(const UtilityEvent&, const UtilityEvent&) = default;
};

using UtilityList = std::vector<UtilityEvent>;
using TagSums = std::array<double, kUtilityTagCount>;

// Environment-specific end-of-episode counters, keyed by name.
using Counters = std::map<std::string, double>;

inline double counter(const Counters& c, const std::string& key) {
  auto it = c.find(key);
  return it == c.end() ? 0.0 : it->second;
}

class InadmissibleIntervention : public std::runtime_error {
 public:
  // `action_id` is -1 when the empty set itself is not admissible.
  InadmissibleIntervention(int action_id, Tick tick, const std::string& what)
      : std::runtime_error(what), action_id_(action_id), tick_(tick) {}

  int action_id() const { return action_id_; }
  Tick tick() const { return tick_; }

 private:
  int action_id_;
  Tick tick_;
};

}  // namespace eplab
