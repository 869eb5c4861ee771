#pragma once

#include <span>

#include "eplab/core/process.hpp"

namespace testing_policies {

// Same set at every consulted tick.
struct Constant {
  eplab::InterventionSet set;
  eplab::DecisionGate g = eplab::DecisionGate::every_tick;

  eplab::DecisionGate gate() const { return g; }
  template <class Info>
  eplab::InterventionSet decide(const Info&, std::span<const eplab::InterventionSet>, eplab::Tick, eplab::Rng&) const {
    return set;
  }
};

// Uniform over the offered menu, drawn from the policy stream.
struct UniformMenu {
  eplab::DecisionGate g = eplab::DecisionGate::every_tick;

  eplab::DecisionGate gate() const { return g; }
  template <class Info>
  eplab::InterventionSet decide(const Info&, std::span<const eplab::InterventionSet> menu, eplab::Tick,
                                eplab::Rng& rng) const {
    if (menu.empty()) return {};
    return menu[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(menu.size()) - 1))];
  }
};

// Picks menu entry `index` when offered more than one set.
struct MenuIndex {
  std::size_t index = 0;

  eplab::DecisionGate gate() const { return eplab::DecisionGate::every_tick; }
  template <class Info>
  eplab::InterventionSet decide(const Info&, std::span<const eplab::InterventionSet> menu, eplab::Tick,
                                eplab::Rng&) const {
    if (menu.empty()) return {};
    return menu[std::min(index, menu.size() - 1)];
  }
};

}  // namespace testing_policies
