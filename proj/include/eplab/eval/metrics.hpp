#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/core/process.hpp"
#include "eplab/eval/bootstrap.hpp"

namespace eplab::eval {

// What evaluation keeps from each episode.
struct EpisodeSummary {
  std::uint64_t seed = 0;
  double total_return = 0.0;
  TagSums tag_sums{};
  Counters counters;
};

inline EpisodeSummary summarize(const EpisodeTrace& t) { return {t.seed, t.total_return, t.tag_sums, t.counters}; }

enum class EnvKind { deliberation, patrol, assistant };

struct Metric {
  std::string key;
  Estimate value;
};

struct MetricsRow {
  std::string env;
  std::string method;
  int n = 0;
  std::vector<Metric> metrics;

  const Estimate* find(const std::string& key) const {
    for (const auto& m : metrics) {
      if (m.key == key) return &m.value;
    }
    return nullptr;
  }
  const Estimate& at(const std::string& key) const {
    if (const auto* e = find(key)) return *e;
    throw std::out_of_range("metrics row has no column " + key);
  }
  double operator[](const std::string& key) const { return at(key).point; }
};

namespace detail {

inline std::vector<double> column(std::span<const EpisodeSummary> eps, const std::string& key) {
  std::vector<double> v;
  v.reserve(eps.size());
  for (const auto& e : eps) v.push_back(counter(e.counters, key));
  return v;
}

}  // namespace detail

inline Estimate mean_of(std::span<const EpisodeSummary> eps, const std::string& counter_key, const BootstrapConfig& cfg) {
  const auto v = detail::column(eps, counter_key);
  return bootstrap_mean(v, cfg);
}

inline Estimate rate_of(std::span<const EpisodeSummary> eps, const std::string& num, const std::string& den,
                        const BootstrapConfig& cfg) {
  const auto a = detail::column(eps, num);
  const auto b = detail::column(eps, den);
  return bootstrap_rate(a, b, cfg);
}

inline Estimate mean_return(std::span<const EpisodeSummary> eps, const BootstrapConfig& cfg) {
  std::vector<double> v;
  for (const auto& e : eps) v.push_back(e.total_return);
  return bootstrap_mean(v, cfg);
}

// Mean magnitude of interrupt-cost utility per episode.
inline Estimate interrupt_cost(std::span<const EpisodeSummary> eps, const BootstrapConfig& cfg) {
  std::vector<double> v;
  for (const auto& e : eps) v.push_back(-e.tag_sums[static_cast<std::size_t>(UtilityTag::interrupt_cost)]);
  return bootstrap_mean(v, cfg);
}

inline MetricsRow compute_metrics(EnvKind kind, std::string env, std::string method, std::span<const EpisodeSummary> eps,
                                  const BootstrapConfig& cfg = {}) {
  if (eps.empty()) throw std::invalid_argument("compute_metrics: no episodes");
  MetricsRow row{std::move(env), std::move(method), static_cast<int>(eps.size()), {}};
  auto add = [&](std::string k, Estimate e) { row.metrics.push_back({std::move(k), e}); };
  switch (kind) {
    case EnvKind::deliberation:
      add("mean_return", mean_return(eps, cfg));
      add("success_rate", rate_of(eps, "successes", "tasks", cfg));
      add("failure_rate", rate_of(eps, "failures", "tasks", cfg));
      add("timeout_rate", rate_of(eps, "timeouts", "tasks", cfg));
      for (int m = 1; m <= 5; ++m) add("mode" + std::to_string(m), rate_of(eps, "mode" + std::to_string(m), "decisions", cfg));
      break;
    case EnvKind::patrol:
      add("mean_return", mean_return(eps, cfg));
      add("resolve_rate", rate_of(eps, "resolved", "alarms", cfg));
      add("expire_rate", rate_of(eps, "expired", "alarms", cfg));
      add("ticks_per_alarm", rate_of(eps, "resolve_ticks", "resolved", cfg));
      add("interrupt_cost", interrupt_cost(eps, cfg));
      break;
    case EnvKind::assistant:
      add("utility", mean_of(eps, "utility", cfg));
      add("balanced", mean_of(eps, "balanced", cfg));
      add("timeout", rate_of(eps, "timeouts", "emails", cfg));
      add("latency", rate_of(eps, "latency_sum", "responded", cfg));
      add("main", mean_of(eps, "main_score", cfg));
      add("visibility_delay", rate_of(eps, "visibility_delay_sum", "emails", cfg));
      break;
  }
  return row;
}

// Frequencies of each mode per urgency bucket from the u<b>_m<m> counters.
// Buckets never visited stay all-zero.
inline std::array<std::array<double, 5>, 5> mode_distribution_by_urgency(std::span<const EpisodeSummary> eps) {
  std::array<std::array<double, 5>, 5> table{};
  for (const auto& e : eps) {
    for (int b = 0; b < 5; ++b) {
      for (int m = 0; m < 5; ++m) {
        table[b][m] += counter(e.counters, "u" + std::to_string(b) + "_m" + std::to_string(m + 1));
      }
    }
  }
  for (auto& row : table) {
    double total = 0.0;
    for (double c : row) total += c;
    if (total > 0.0) {
      for (double& c : row) c /= total;
    }
  }
  return table;
}

inline std::array<std::array<double, 5>, 5> mode_distribution_by_urgency(std::span<const EpisodeTrace> traces) {
  std::vector<EpisodeSummary> eps;
  for (const auto& t : traces) eps.push_back(summarize(t));
  return mode_distribution_by_urgency(std::span<const EpisodeSummary>(eps));
}

// -- tables -----------------------------------------------------------------

struct Column {
  std::string key;
  std::string title;
  bool percent = false;
  int digits = 2;
};

inline std::vector<Column> table_columns(EnvKind kind, bool depth_table = false) {
  switch (kind) {
    case EnvKind::deliberation:
      return {{"mean_return", "Mean return", false, 2},
              {"success_rate", "Success rate (%)", true, 1},
              {"timeout_rate", "Timeout rate (%)", true, 1},
              {"mode5", "Mode 5 usage (%)", true, 1}};
    case EnvKind::patrol:
      if (depth_table) {
        return {{"mean_return", "Mean return", false, 2},
                {"resolve_rate", "Resolve rate (%)", true, 1},
                {"expire_rate", "Expire rate (%)", true, 1},
                {"interrupt_cost", "Interrupt cost", false, 2}};
      }
      return {{"mean_return", "Mean return", false, 2},
              {"resolve_rate", "Resolve rate (%)", true, 1},
              {"expire_rate", "Expire rate (%)", true, 1},
              {"ticks_per_alarm", "Ticks per alarm", false, 2}};
    case EnvKind::assistant:
      return {{"utility", "Utility", false, 3},
              {"balanced", "Balanced", false, 3},
              {"timeout", "Timeout", false, 3},
              {"latency", "Latency", false, 2},
              {"main", "Main", false, 3}};
  }
  return {};
}

inline std::string format_number(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);  // no "-0.00"
  return s;
}

inline std::string format_cell(const Estimate& e, const Column& c) {
  const double scale = c.percent ? 100.0 : 1.0;
  return format_number(e.point * scale, c.digits) + " ± " + format_number(e.half_width * scale, c.digits);
}

// Every metric of every row with full precision: env, method, n, then
// <key>,<key>_hw pairs. Rows must share the same columns.
inline std::string to_csv(std::span<const MetricsRow> rows) {
  std::ostringstream os;
  if (rows.empty()) return {};
  os << "env,method,n";
  for (const auto& m : rows.front().metrics) os << ',' << m.key << ',' << m.key << "_hw";
  os << '\n';
  char buf[40];
  for (const auto& r : rows) {
    os << r.env << ',' << r.method << ',' << r.n;
    for (const auto& m : r.metrics) {
      std::snprintf(buf, sizeof buf, "%.10g", m.value.point);
      os << ',' << buf;
      std::snprintf(buf, sizeof buf, "%.10g", m.value.half_width);
      os << ',' << buf;
    }
    os << '\n';
  }
  return os.str();
}

// Inverse of to_csv.
inline std::vector<MetricsRow> from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto cells = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ls(l);
    while (std::getline(ls, cur, ',')) out.push_back(cur);
    return out;
  };
  if (!std::getline(in, line)) return {};
  const auto header = cells(line);
  if (header.size() < 3 || header[0] != "env" || header[1] != "method" || header[2] != "n" || header.size() % 2 == 0) {
    throw std::invalid_argument("not a metrics CSV header: " + line);
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = cells(line);
    if (c.size() != header.size()) throw std::invalid_argument("metrics CSV row has " + std::to_string(c.size()) + " cells");
    MetricsRow r{c[0], c[1], std::stoi(c[2]), {}};
    for (std::size_t i = 3; i < c.size(); i += 2) r.metrics.push_back({header[i], {std::stod(c[i]), std::stod(c[i + 1])}});
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string to_markdown(std::span<const MetricsRow> rows, const std::vector<Column>& cols,
                               const std::string& first_title = "Method") {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{first_title};
  for (const auto& c : cols) header.push_back(c.title);
  cells.push_back(header);
  for (const auto& r : rows) {
    std::vector<std::string> line{r.method};
    for (const auto& c : cols) line.push_back(format_cell(r.at(c.key), c));
    cells.push_back(std::move(line));
  }
  // "±" is two bytes but one column wide.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], width(line[i]));
  }
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& line) {
    os << '|';
    for (std::size_t i = 0; i < line.size(); ++i) {
      const std::string pad(widths[i] - width(line[i]), ' ');
      os << ' ' << (i == 0 ? line[i] + pad : pad + line[i]) << " |";
    }
    os << '\n';
  };
  emit(cells.front());
  os << '|';
  for (std::size_t i = 0; i < widths.size(); ++i) os << (i == 0 ? ' ' + std::string(widths[i], '-') + " |" : ' ' + std::string(widths[i] - 1, '-') + ": |");
  os << '\n';
  for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
  return os.str();
}

inline std::string mode_distribution_markdown(const std::array<std::array<double, 5>, 5>& t) {
  std::ostringstream os;
  os << "| Urgency bucket | Mode 1 | Mode 2 | Mode 3 | Mode 4 | Mode 5 |\n";
  os << "| -------------- | -----: | -----: | -----: | -----: | -----: |\n";
  for (int b = 0; b < 5; ++b) {
    os << "| " << b << std::string(13, ' ') << " |";
    for (int m = 0; m < 5; ++m) {
      const std::string v = format_number(t[b][m], 3);
      os << ' ' << std::string(6 - v.size(), ' ') << v << " |";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace eplab::eval
