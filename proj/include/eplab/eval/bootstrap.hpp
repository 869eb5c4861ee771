#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "eplab/core/rng.hpp"

namespace eplab::eval {

struct BootstrapConfig {
  int resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 42;

  void validate() const {
    if (resamples < 1) throw std::invalid_argument("bootstrap: resamples must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap: level must lie in (0,1)");
  }
};

struct Estimate {
  double point = 0.0;
  double half_width = 0.0;

  friend bool operator==(const Estimate&, const Estimate&) = default;
};

enum class StatKind { mean, rate_from_counts };

// Linear interpolation between closest ranks over sorted data.
inline double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

namespace detail {

inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

// Resamples episode indices; `stat` maps a multiset of indices (as counts)
// onto the statistic.
template <class Stat>
Estimate percentile_bootstrap(std::size_t n, double point, const BootstrapConfig& cfg, Stat stat) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<double> stats(static_cast<std::size_t>(cfg.resamples));
  std::vector<std::size_t> draw(n);
  for (auto& s : stats) {
    for (auto& d : draw) d = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    s = stat(draw);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - cfg.level) / 2.0;
  return {point, (percentile(stats, 1.0 - tail) - percentile(stats, tail)) / 2.0};
}

}  // namespace detail

inline Estimate bootstrap_mean(std::span<const double> values, const BootstrapConfig& cfg = {}) {
  if (values.empty()) throw std::invalid_argument("bootstrap: empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  return detail::percentile_bootstrap(values.size(), sum / n, cfg, [&](const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (auto i : idx) s += values[i];
    return s / n;
  });
}

// Ratio of summed numerators to summed denominators, resampling episodes.
inline Estimate bootstrap_rate(std::span<const double> numerators, std::span<const double> denominators,
                               const BootstrapConfig& cfg = {}) {
  if (numerators.empty()) throw std::invalid_argument("bootstrap: empty sample");
  if (numerators.size() != denominators.size()) throw std::invalid_argument("bootstrap: count vectors differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < numerators.size(); ++i) {
    num += numerators[i];
    den += denominators[i];
  }
  return detail::percentile_bootstrap(numerators.size(), detail::ratio(num, den), cfg,
                                      [&](const std::vector<std::size_t>& idx) {
                                        double a = 0.0, b = 0.0;
                                        for (auto i : idx) {
                                          a += numerators[i];
                                          b += denominators[i];
                                        }
                                        return detail::ratio(a, b);
                                      });
}

// For kind == mean, `values` holds the per-episode values; for
// rate_from_counts it holds (numerator, denominator) pairs laid out flat.
inline Estimate bootstrap_ci(std::span<const double> values, StatKind kind, const BootstrapConfig& cfg = {}) {
  if (kind == StatKind::mean) return bootstrap_mean(values, cfg);
  if (values.size() % 2 != 0) throw std::invalid_argument("bootstrap: counts must come in pairs");
  std::vector<double> num, den;
  for (std::size_t i = 0; i < values.size(); i += 2) {
    num.push_back(values[i]);
    den.push_back(values[i + 1]);
  }
  return bootstrap_rate(num, den, cfg);
}

}  // namespace eplab::eval
