#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/belief/finite_ep.hpp"

namespace eplab::belief {

struct Belief {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t s) const { return probs[s]; }

  static Belief point(std::size_t n, std::size_t s) {
    Belief b{std::vector<double>(n, 0.0)};
    b.probs[s] = 1.0;
    return b;
  }
  static Belief uniform(std::size_t n) { return Belief{std::vector<double>(n, 1.0 / static_cast<double>(n))}; }
};

class ImpossibleObservation : public std::domain_error {
 public:
  explicit ImpossibleObservation(std::size_t obs)
      : std::domain_error("observation set " + std::to_string(obs) + " has zero likelihood under the belief"),
        obs_(obs) {}
  std::size_t observation() const { return obs_; }

 private:
  std::size_t obs_;
};

class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(std::uint64_t budget)
      : std::runtime_error("expectimax node budget of " + std::to_string(budget) + " exceeded") {}
};

inline void check_belief(const Belief& b, const FiniteEP& ep) {
  if (b.size() != ep.num_states()) throw std::invalid_argument("belief size does not match state count");
}

inline void check_set(std::size_t a, const FiniteEP& ep) {
  if (a >= ep.num_sets()) throw std::out_of_range("unknown intervention set index " + std::to_string(a));
}

// Predictive belief before the next observation: sum_s F(s'|s,A) b(s).
inline Belief predict(const Belief& b, std::size_t a, const FiniteEP& ep) {
  check_belief(b, ep);
  check_set(a, ep);
  const std::size_t n = ep.num_states();
  Belief out{std::vector<double>(n, 0.0)};
  for (std::size_t s = 0; s < n; ++s) {
    if (b.probs[s] == 0.0) continue;
    const auto& row = ep.transition[s][a];
    for (std::size_t sp = 0; sp < n; ++sp) out.probs[sp] += row[sp] * b.probs[s];
  }
  return out;
}

// Bayes update on an observation set; the empty set is ordinary evidence.
inline Belief posterior(const Belief& b_bar, std::size_t y, const FiniteEP& ep) {
  check_belief(b_bar, ep);
  if (y >= ep.num_obs()) throw std::out_of_range("unknown observation set index " + std::to_string(y));
  const std::size_t n = ep.num_states();
  Belief out{std::vector<double>(n, 0.0)};
  double eta = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    out.probs[s] = ep.observation[s][y] * b_bar.probs[s];
    eta += out.probs[s];
  }
  if (!(eta > 0.0)) throw ImpossibleObservation(y);
  for (double& p : out.probs) p /= eta;
  return out;
}

// P(Y | b, A) over the observation-set alphabet.
inline std::vector<double> obs_predictive(const Belief& b, std::size_t a, const FiniteEP& ep) {
  const Belief b_bar = predict(b, a, ep);
  std::vector<double> out(ep.num_obs(), 0.0);
  for (std::size_t s = 0; s < ep.num_states(); ++s) {
    if (b_bar.probs[s] == 0.0) continue;
    for (std::size_t y = 0; y < ep.num_obs(); ++y) out[y] += ep.observation[s][y] * b_bar.probs[s];
  }
  return out;
}

// r(b, A) = sum_s b(s) U(s, A).
inline double expected_utility(const Belief& b, std::size_t a, const FiniteEP& ep) {
  double r = 0.0;
  for (std::size_t s = 0; s < ep.num_states(); ++s) r += b.probs[s] * ep.utility[s][a];
  return r;
}

// A set is admissible under a belief when every supported state admits it.
inline bool admissible_under(const Belief& b, std::size_t a, const FiniteEP& ep) {
  for (std::size_t s = 0; s < ep.num_states(); ++s) {
    if (b.probs[s] > 0.0 && !ep.is_admissible(s, a)) return false;
  }
  return true;
}

struct BellmanResult {
  double value = 0.0;
  std::size_t best = 0;
};

inline constexpr std::uint64_t kDefaultNodeBudget = 10'000'000;

namespace detail {

struct Expectimax {
  const FiniteEP& ep;
  std::uint64_t budget;
  std::uint64_t nodes = 0;

  BellmanResult solve(const Belief& b, int horizon) {
    if (++nodes > budget) throw BudgetExceeded(budget);
    BellmanResult best{0.0, 0};
    if (horizon == 0) return best;
    bool found = false;
    for (std::size_t a = 0; a < ep.num_sets(); ++a) {
      if (!admissible_under(b, a, ep)) continue;
      double q = expected_utility(b, a, ep);
      if (horizon > 1) {
        const Belief b_bar = predict(b, a, ep);
        const auto p_obs = obs_predictive(b, a, ep);
        double future = 0.0;
        for (std::size_t y = 0; y < ep.num_obs(); ++y) {
          if (p_obs[y] <= 0.0) continue;
          future += p_obs[y] * solve(posterior(b_bar, y, ep), horizon - 1).value;
        }
        q += ep.gamma * future;
      }
      if (!found || q > best.value) {
        best = {q, a};
        found = true;
      }
    }
    if (!found) throw std::domain_error("no intervention set is admissible under the belief");
    return best;
  }
};

}  // namespace detail

// Exact finite-horizon optimum by expectimax over intervention sets and
// observation sets. Ties go to the lowest set index; horizon 0 gives (0, 0).
inline BellmanResult bellman_optimal_value(const FiniteEP& ep, const Belief& b, int horizon,
                                           std::uint64_t node_budget = kDefaultNodeBudget) {
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  check_belief(b, ep);
  detail::Expectimax solver{ep, node_budget};
  return solver.solve(b, horizon);
}

}  // namespace eplab::belief
