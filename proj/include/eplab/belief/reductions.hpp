#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/belief/belief.hpp"
#include "eplab/core/process.hpp"

namespace eplab::belief {

// Textbook POMDP with action-independent observation model.
struct Pomdp {
  std::vector<std::vector<std::vector<double>>> transition;  // [s][a][s']
  std::vector<std::vector<double>> observation;               // [s'][y]
  std::vector<std::vector<double>> reward;                    // [s][a]
  double gamma = 1.0;

  std::size_t num_states() const { return transition.size(); }
  std::size_t num_actions() const { return transition.empty() ? 0 : transition[0].size(); }
  std::size_t num_obs() const { return observation.empty() ? 0 : observation[0].size(); }
};

// Synchronized restriction: every intervention set is a singleton {a} and
// every observation set a singleton {y}.
inline FiniteEP pomdp_sync_reduce(const Pomdp& pomdp) {
  const std::size_t n = pomdp.num_states(), k = pomdp.num_actions(), m = pomdp.num_obs();
  FiniteEP ep;
  for (std::size_t s = 0; s < n; ++s) ep.states.push_back("s" + std::to_string(s));
  for (std::size_t a = 0; a < k; ++a) {
    ep.set_names.push_back("a" + std::to_string(a));
    ep.intervention_sets.push_back(InterventionSet::single(static_cast<int>(a)));
  }
  for (std::size_t y = 0; y < m; ++y) {
    ep.obs_names.push_back("y" + std::to_string(y));
    ep.obs_sets.push_back({static_cast<int>(y)});
  }
  ep.resize(n, k, m);
  ep.gamma = pomdp.gamma;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < k; ++a) {
      ep.transition[s][a] = pomdp.transition[s][a];
      ep.utility[s][a] = pomdp.reward[s][a];
    }
    ep.observation[s] = pomdp.observation[s];
  }
  ep.validate();
  return ep;
}

// A temporally extended option over a FiniteEP.
struct OptionSpec {
  std::vector<bool> initiation;  // per base state
  std::vector<int> policy;       // base set index executed in each state, -1 if undefined
  std::vector<bool> terminates;  // termination flag per base state
  int action_id = 1000;          // atomic id of the option-initiating action
  std::string name = "option";
};

// Augments the state with an active-option marker. Encoded states are
// (s, inactive) at index s and (s, active) at index n + s. Base sets keep
// their indices; the option set {o} follows, then an empty set if the base
// alphabet lacks one. While the option runs only the empty set is
// admissible; observations keep arriving every tick.
inline FiniteEP encode_option(const FiniteEP& base, const OptionSpec& opt) {
  base.validate();
  const std::size_t n = base.num_states(), k = base.num_sets(), m = base.num_obs();
  if (opt.initiation.size() != n || opt.policy.size() != n || opt.terminates.size() != n) {
    throw std::invalid_argument("option tables must cover every base state");
  }

  // The option must be executable wherever it can be running.
  std::vector<bool> reachable(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    if (opt.initiation[s]) reachable[s] = true;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t s = 0; s < n; ++s) {
      if (!reachable[s]) continue;
      const int a = opt.policy[s];
      if (a < 0 || static_cast<std::size_t>(a) >= k) {
        throw std::invalid_argument("option policy undefined in state " + base.states[s]);
      }
      for (std::size_t sp = 0; sp < n; ++sp) {
        if (base.transition[s][a][sp] > 0.0 && !opt.terminates[sp] && !reachable[sp]) {
          reachable[sp] = true;
          changed = true;
        }
      }
    }
  }

  FiniteEP ep;
  for (std::size_t s = 0; s < n; ++s) ep.states.push_back(base.states[s]);
  for (std::size_t s = 0; s < n; ++s) ep.states.push_back(base.states[s] + "*");
  ep.set_names = base.set_names;
  ep.intervention_sets = base.intervention_sets;
  const std::size_t opt_index = ep.intervention_sets.size();
  ep.set_names.push_back(opt.name);
  ep.intervention_sets.push_back(InterventionSet::single(opt.action_id));
  int empty = base.empty_set_index();
  bool added_empty = false;
  if (empty < 0) {
    empty = static_cast<int>(ep.intervention_sets.size());
    ep.set_names.push_back("none");
    ep.intervention_sets.push_back(InterventionSet{});
    added_empty = true;
  }
  ep.obs_names = base.obs_names;
  ep.obs_sets = base.obs_sets;
  ep.gamma = base.gamma;
  const std::size_t K = ep.intervention_sets.size();
  ep.resize(2 * n, K, m);

  auto run_option_from = [&](std::size_t s, std::size_t row_state, std::size_t row_set) {
    const std::size_t a = static_cast<std::size_t>(opt.policy[s]);
    for (std::size_t sp = 0; sp < n; ++sp) {
      const double p = base.transition[s][a][sp];
      if (p == 0.0) continue;
      ep.transition[row_state][row_set][opt.terminates[sp] ? sp : n + sp] += p;
    }
    ep.utility[row_state][row_set] = base.utility[s][a];
  };
  auto self_loop = [&](std::size_t row_state, std::size_t row_set) {
    ep.transition[row_state][row_set][row_state] = 1.0;
    ep.admissible[row_state][row_set] = false;
  };

  for (std::size_t s = 0; s < n; ++s) {
    ep.observation[s] = base.observation[s];
    ep.observation[n + s] = base.observation[s];

    // inactive
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t sp = 0; sp < n; ++sp) ep.transition[s][a][sp] = base.transition[s][a][sp];
      ep.utility[s][a] = base.utility[s][a];
      ep.admissible[s][a] = base.is_admissible(s, a);
    }
    if (opt.initiation[s]) {
      run_option_from(s, s, opt_index);
    } else {
      self_loop(s, opt_index);
    }
    if (added_empty) self_loop(s, static_cast<std::size_t>(empty));

    // active: only the empty set, which advances the option one tick
    for (std::size_t a = 0; a < K; ++a) {
      if (static_cast<int>(a) == empty) continue;
      self_loop(n + s, a);
    }
    if (reachable[s]) {
      run_option_from(s, n + s, static_cast<std::size_t>(empty));
    } else {
      self_loop(n + s, static_cast<std::size_t>(empty));
      ep.admissible[n + s][static_cast<std::size_t>(empty)] = true;
    }
  }
  ep.validate();
  return ep;
}

inline bool option_active(const FiniteEP& encoded, std::size_t state) {
  return state >= encoded.num_states() / 2;
}

// Exposes a FiniteEP as a ProcessSpec over state indices. Atomic action ids
// are taken verbatim from the intervention sets.
inline ProcessSpec<std::size_t> finite_process(const FiniteEP& ep_in, std::size_t initial_state,
                                               Tick horizon) {
  ep_in.validate();
  auto ep = std::make_shared<const FiniteEP>(ep_in);
  ProcessSpec<std::size_t> spec;
  spec.name = "finite";
  spec.horizon = horizon;
  spec.gamma_tick = ep->gamma;
  int max_id = 0;
  for (const auto& set : ep->intervention_sets) {
    for (const auto& a : set) max_id = std::max(max_id, a.id);
  }
  if (max_id < 4096) {
    spec.action_names.resize(static_cast<std::size_t>(max_id) + 1);
    for (std::size_t i = 0; i < spec.action_names.size(); ++i) spec.action_names[i] = "act" + std::to_string(i);
  }

  spec.initial = [initial_state](Streams&) { return initial_state; };
  spec.violation = [ep](const std::size_t& s, const InterventionSet& set) -> std::optional<AtomicAction> {
    const int a = ep->set_index(set);
    if (a >= 0 && ep->is_admissible(s, static_cast<std::size_t>(a))) return std::nullopt;
    if (set.empty()) return AtomicAction{-1, 0};
    return set.actions().front();
  };
  spec.enumerate = [ep](const std::size_t& s) {
    std::vector<InterventionSet> out;
    for (std::size_t a = 0; a < ep->num_sets(); ++a) {
      if (ep->is_admissible(s, a)) out.push_back(ep->intervention_sets[a]);
    }
    return out;
  };
  spec.transition = [ep](const std::size_t& s, const InterventionSet& set, Streams& rng) {
    const auto a = static_cast<std::size_t>(ep->set_index(set));
    return rng.transition.categorical(ep->transition[s][a]);
  };
  spec.observe = [ep](const std::size_t& s, Tick t, Streams& rng) {
    const std::size_t y = rng.observation.categorical(ep->observation[s]);
    ObservationSet out;
    for (int e : ep->obs_sets[y]) out.emit(e, t);
    return out;
  };
  spec.utility = [ep](const std::size_t& s, const InterventionSet& set, Tick t) {
    const auto a = static_cast<std::size_t>(ep->set_index(set));
    return UtilityList{{ep->utility[s][a], t, UtilityTag::task_reward}};
  };
  spec.annotate = [ep](const std::size_t& s) {
    return Annotation{{"state", ep->states[s]}};
  };
  return spec;
}

}  // namespace eplab::belief
