#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/core/process.hpp"

// Tick panels for recorded patrol traces. Everything drawn is read from the
// per-tick state annotations; nothing is recomputed.

namespace eplab::render {

enum class Format { ascii, svg };
enum class Criterion { first_interruption, first_alarm_during_handling };

inline constexpr int kAsciiWidth = 80;

struct Panel {
  Tick tick = 0;
  int grid = 0;
  std::vector<std::pair<int, int>> checkpoints;
  int target = -1;
  std::pair<int, int> pos{0, 0};
  std::string mode;
  std::string phase;               // empty unless handling
  std::optional<int> remaining;    // handling or resolving ticks left
  std::optional<std::pair<int, int>> alarm;
  int deadline = 0;                // alarm countdown
};

inline Panel panel_at(const EpisodeTrace& trace, std::size_t index) {
  const auto& rec = trace.ticks.at(index);
  const Annotation& a = rec.annotation;
  if (!a.is_object() || !a.contains("grid") || !a.contains("pos")) {
    throw std::invalid_argument("tick " + std::to_string(rec.tick) + " has no patrol annotation");
  }
  Panel p;
  p.tick = rec.tick;
  p.grid = a.at("grid").get<int>();
  for (const auto& c : a.at("checkpoints")) p.checkpoints.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
  p.target = a.value("target", -1);
  p.pos = {a.at("pos").at(0).get<int>(), a.at("pos").at(1).get<int>()};
  p.mode = a.value("mode", std::string{});
  p.phase = a.value("phase", std::string{});
  if (a.contains("remaining")) p.remaining = a.at("remaining").get<int>();
  if (a.contains("alarm") && !a.at("alarm").is_null()) {
    const auto& al = a.at("alarm");
    p.alarm = std::make_pair(al.at("pos").at(0).get<int>(), al.at("pos").at(1).get<int>());
    p.deadline = al.at("deadline").get<int>();
  }
  return p;
}

namespace detail {

inline void check_window(const EpisodeTrace& trace, Tick start, int n_panels) {
  if (trace.ticks.empty()) throw std::out_of_range("trace has no recorded ticks");
  if (n_panels < 1) throw std::out_of_range("need at least one panel");
  if (start < 0 || static_cast<std::size_t>(start) + static_cast<std::size_t>(n_panels) > trace.ticks.size()) {
    throw std::out_of_range("window [" + std::to_string(start) + ", " + std::to_string(start + n_panels) +
                            ") outside trace of " + std::to_string(trace.ticks.size()) + " ticks");
  }
}

inline char mode_letter(const std::string& mode) {
  if (mode == "nav_patrol") return 'P';
  if (mode == "nav_alarm") return 'A';
  if (mode == "resolve") return 'R';
  if (mode == "handle_ckpt") return 'H';
  return '?';
}

inline std::vector<std::string> ascii_panel(const Panel& p, int width) {
  std::vector<std::string> lines;
  lines.push_back("t=" + std::to_string(p.tick));
  const std::string edge = "+" + std::string(static_cast<std::size_t>(p.grid), '-') + "+";
  lines.push_back(edge);
  for (int y = 0; y < p.grid; ++y) {
    std::string row(static_cast<std::size_t>(p.grid), '.');
    for (std::size_t i = 0; i < p.checkpoints.size(); ++i) {
      const auto [cx, cy] = p.checkpoints[i];
      if (cy == y) row[static_cast<std::size_t>(cx)] = static_cast<int>(i) == p.target ? 'C' : 'c';
    }
    if (p.alarm && p.alarm->second == y) row[static_cast<std::size_t>(p.alarm->first)] = '!';
    if (p.pos.second == y) {
      char& cell = row[static_cast<std::size_t>(p.pos.first)];
      cell = cell == '!' ? '@' : '*';
    }
    lines.push_back("|" + row + "|");
  }
  lines.push_back(edge);
  std::string mode = "[";
  mode += mode_letter(p.mode);
  mode += "] " + p.mode;
  lines.push_back(mode);
  std::string badge = p.phase;
  if (p.remaining) badge += (badge.empty() ? "" : " ") + std::string("||") + std::to_string(*p.remaining);
  lines.push_back(badge);
  lines.push_back(p.alarm ? "alarm (" + std::to_string(p.alarm->first) + "," + std::to_string(p.alarm->second) +
                                ") " + std::to_string(p.deadline)
                          : std::string("no alarm"));
  for (auto& l : lines) {
    if (static_cast<int>(l.size()) > width) l.resize(static_cast<std::size_t>(width));
    l.resize(static_cast<std::size_t>(width), ' ');
  }
  return lines;
}

inline std::string ascii(const std::vector<Panel>& panels) {
  const int grid = panels.front().grid;
  const int width = std::max(20, grid + 4);
  const int per_row = std::max(1, kAsciiWidth / width);
  std::ostringstream os;
  for (std::size_t first = 0; first < panels.size(); first += static_cast<std::size_t>(per_row)) {
    const std::size_t last = std::min(panels.size(), first + static_cast<std::size_t>(per_row));
    std::vector<std::vector<std::string>> cols;
    for (std::size_t i = first; i < last; ++i) cols.push_back(ascii_panel(panels[i], width));
    for (std::size_t line = 0; line < cols.front().size(); ++line) {
      std::string out;
      for (const auto& c : cols) out += c[line];
      out.resize(static_cast<std::size_t>(kAsciiWidth), ' ');
      os << out << '\n';
    }
    if (last < panels.size()) os << '\n';
  }
  os << "legend: * agent  C target checkpoint  c checkpoint  ! alarm  @ agent on alarm\n"
        "        [P] patrol  [H] handling  [A] to alarm  [R] resolving  ||n ticks left\n";
  return os.str();
}

inline const char* mode_color(const std::string& mode) {
  if (mode == "nav_patrol") return "#4a7bd0";
  if (mode == "nav_alarm") return "#d04a4a";
  if (mode == "resolve") return "#9b4ad0";
  if (mode == "handle_ckpt") return "#3a9a4a";
  return "#777777";
}

inline std::string svg(const std::vector<Panel>& panels) {
  const int cell = 24;
  const int grid = panels.front().grid;
  const int pad = 12;
  const int pw = grid * cell + 2 * pad;
  const int ph = grid * cell + 2 * pad + 70;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << pw * static_cast<int>(panels.size())
     << "\" height=\"" << ph << "\" font-family=\"monospace\" font-size=\"11\">\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const Panel& p = panels[k];
    const int ox = static_cast<int>(k) * pw + pad;
    const int oy = pad + 16;
    auto cx = [&](int x) { return ox + x * cell + cell / 2; };
    auto cy = [&](int y) { return oy + y * cell + cell / 2; };
    os << "<g>\n<text x=\"" << ox << "\" y=\"" << pad + 4 << "\">t=" << p.tick << "</text>\n";
    os << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << grid * cell << "\" height=\"" << grid * cell
       << "\" fill=\"#ffffff\" stroke=\"#333333\"/>\n";
    for (int i = 1; i < grid; ++i) {
      os << "<line x1=\"" << ox + i * cell << "\" y1=\"" << oy << "\" x2=\"" << ox + i * cell << "\" y2=\""
         << oy + grid * cell << "\" stroke=\"#dddddd\"/>\n";
      os << "<line x1=\"" << ox << "\" y1=\"" << oy + i * cell << "\" x2=\"" << ox + grid * cell << "\" y2=\""
         << oy + i * cell << "\" stroke=\"#dddddd\"/>\n";
    }
    for (std::size_t i = 0; i < p.checkpoints.size(); ++i) {
      const auto [x, y] = p.checkpoints[i];
      os << "<rect x=\"" << ox + x * cell + 4 << "\" y=\"" << oy + y * cell + 4 << "\" width=\"" << cell - 8
         << "\" height=\"" << cell - 8 << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\""
         << (static_cast<int>(i) == p.target ? 2 : 1) << "\"/>\n";
    }
    if (p.alarm) {
      os << "<circle cx=\"" << cx(p.alarm->first) << "\" cy=\"" << cy(p.alarm->second) << "\" r=\"" << cell / 2 - 1
         << "\" fill=\"none\" stroke=\"#d04a4a\" stroke-dasharray=\"3,2\"/>\n";
      os << "<text x=\"" << cx(p.alarm->first) + cell / 2 << "\" y=\"" << cy(p.alarm->second) - cell / 2
         << "\" fill=\"#d04a4a\">" << p.deadline << "</text>\n";
    }
    os << "<circle cx=\"" << cx(p.pos.first) << "\" cy=\"" << cy(p.pos.second) << "\" r=\"" << cell / 3
       << "\" fill=\"" << mode_color(p.mode) << "\"/>\n";
    if (p.remaining) {
      os << "<text x=\"" << cx(p.pos.first) + cell / 3 << "\" y=\"" << cy(p.pos.second) + cell / 2
         << "\" font-size=\"9\">||" << *p.remaining << "</text>\n";
    }
    const int ty = oy + grid * cell + 18;
    os << "<text x=\"" << ox << "\" y=\"" << ty << "\" fill=\"" << mode_color(p.mode) << "\">" << p.mode
       << (p.phase.empty() ? "" : " / " + p.phase) << "</text>\n";
    os << "<text x=\"" << ox << "\" y=\"" << ty + 16 << "\">"
       << (p.alarm ? "alarm deadline " + std::to_string(p.deadline) : std::string("no alarm")) << "</text>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace detail

inline std::string render_window(const EpisodeTrace& trace, Tick start, int n_panels, Format format) {
  detail::check_window(trace, start, n_panels);
  std::vector<Panel> panels;
  for (int k = 0; k < n_panels; ++k) panels.push_back(panel_at(trace, static_cast<std::size_t>(start + k)));
  return format == Format::ascii ? detail::ascii(panels) : detail::svg(panels);
}

// Earliest recorded tick meeting the criterion: a respond decision taken
// mid-handling (not at a module boundary), or an alarm spawning while
// handling.
inline std::optional<Tick> find_first_event(const EpisodeTrace& trace, Criterion criterion) {
  const auto respond = std::find(trace.action_names.begin(), trace.action_names.end(), "respond_alarm");
  const auto spawn = std::find(trace.event_names.begin(), trace.event_names.end(), "alarm_spawn");
  const int respond_id = respond == trace.action_names.end() ? -1 : static_cast<int>(respond - trace.action_names.begin());
  const int spawn_id = spawn == trace.event_names.end() ? -1 : static_cast<int>(spawn - trace.event_names.begin());
  for (const auto& rec : trace.ticks) {
    if (!rec.annotation.is_object() || rec.annotation.value("mode", std::string{}) != "handle_ckpt") continue;
    if (criterion == Criterion::first_interruption) {
      if (respond_id >= 0 && rec.interventions.contains_id(respond_id) && !rec.annotation.value("boundary", false)) {
        return rec.tick;
      }
    } else if (spawn_id >= 0 && rec.observations.find(spawn_id)) {
      return rec.tick;
    }
  }
  return std::nullopt;
}

inline std::optional<Criterion> parse_criterion(const std::string& s) {
  if (s == "first_interruption") return Criterion::first_interruption;
  if (s == "first_alarm_during_handling") return Criterion::first_alarm_during_handling;
  return std::nullopt;
}

}  // namespace eplab::render
