#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/core/types.hpp"

namespace eplab::belief {

inline constexpr double kRowTolerance = 1e-12;

// Tabular engagement process: enumerated states, intervention sets and
// observation-set alphabet with explicit kernels.
struct FiniteEP {
  std::vector<std::string> states;
  std::vector<std::string> set_names;
  std::vector<InterventionSet> intervention_sets;
  std::vector<std::string> obs_names;
  std::vector<std::vector<int>> obs_sets;  // event ids of each observation set

  // transition[s][a][s'], observation[s][y], utility[s][a], admissible[s][a]
  std::vector<std::vector<std::vector<double>>> transition;
  std::vector<std::vector<double>> observation;
  std::vector<std::vector<double>> utility;
  std::vector<std::vector<bool>> admissible;
  double gamma = 1.0;

  std::size_t num_states() const { return states.size(); }
  std::size_t num_sets() const { return intervention_sets.size(); }
  std::size_t num_obs() const { return obs_sets.size(); }

  bool is_admissible(std::size_t s, std::size_t a) const {
    return admissible.empty() || admissible[s][a];
  }

  // Index of the empty intervention set, or -1.
  int empty_set_index() const {
    for (std::size_t a = 0; a < intervention_sets.size(); ++a) {
      if (intervention_sets[a].empty()) return static_cast<int>(a);
    }
    return -1;
  }

  int set_index(const InterventionSet& set) const {
    for (std::size_t a = 0; a < intervention_sets.size(); ++a) {
      if (intervention_sets[a] == set) return static_cast<int>(a);
    }
    return -1;
  }

  // Allocates zeroed tables for the given dimensions.
  void resize(std::size_t n_states, std::size_t n_sets, std::size_t n_obs) {
    transition.assign(n_states, std::vector<std::vector<double>>(n_sets, std::vector<double>(n_states, 0.0)));
    observation.assign(n_states, std::vector<double>(n_obs, 0.0));
    utility.assign(n_states, std::vector<double>(n_sets, 0.0));
    admissible.assign(n_states, std::vector<bool>(n_sets, true));
  }

  // Throws std::invalid_argument describing the first broken invariant.
  void validate() const {
    const std::size_t n = num_states(), k = num_sets(), m = num_obs();
    if (n == 0) throw std::invalid_argument("FiniteEP: no states");
    if (k == 0) throw std::invalid_argument("FiniteEP: no intervention sets");
    if (m == 0) throw std::invalid_argument("FiniteEP: empty observation alphabet");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("FiniteEP: gamma outside (0,1]");
    if (set_names.size() != k || obs_names.size() != m) {
      throw std::invalid_argument("FiniteEP: name tables do not match alphabet sizes");
    }
    if (transition.size() != n || observation.size() != n || utility.size() != n) {
      throw std::invalid_argument("FiniteEP: table shapes do not match state count");
    }
    if (!admissible.empty() && admissible.size() != n) {
      throw std::invalid_argument("FiniteEP: admissibility table shape");
    }
    auto check_row = [](const std::vector<double>& row, const std::string& label) {
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw std::invalid_argument("FiniteEP: negative probability in " + label);
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowTolerance) {
        throw std::invalid_argument("FiniteEP: " + label + " sums to " + std::to_string(sum));
      }
    };
    for (std::size_t s = 0; s < n; ++s) {
      if (transition[s].size() != k || utility[s].size() != k || observation[s].size() != m) {
        throw std::invalid_argument("FiniteEP: ragged table at state " + states[s]);
      }
      for (std::size_t a = 0; a < k; ++a) {
        if (transition[s][a].size() != n) throw std::invalid_argument("FiniteEP: ragged F row");
        check_row(transition[s][a], "F[" + states[s] + "][" + set_names[a] + "]");
      }
      check_row(observation[s], "O[" + states[s] + "]");
    }
  }
};

}  // namespace eplab::belief
