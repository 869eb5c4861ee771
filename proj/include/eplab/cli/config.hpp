#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/agents/qlearning.hpp"
#include "eplab/envs/assistant.hpp"
#include "eplab/envs/deliberation.hpp"
#include "eplab/envs/patrol.hpp"
#include "eplab/eval/bootstrap.hpp"

// Experiment configuration files.
//
// Grammar (one item per line):
//   # comment            also ';'
//   [section]
//   key = value
// Blank lines are ignored, keys and values are trimmed, a key may appear at
// most once per section. Lists are comma separated; pairs and triples inside
// a list item are separated by spaces, e.g.
//   checkpoints = 0 0, 0 7, 7 7, 7 0
//   phases = observe 4 -1, commit 10 -5
// Every field has a default, so an empty file (or none) runs the defaults of
// the experiment named by [experiment] id or by --experiment.

namespace eplab::cli {

inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& where, int line, const std::string& what)
      : std::runtime_error(where + (line > 0 ? ":" + std::to_string(line) : std::string{}) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"deliberation-single", "deliberation-sequential", "patrol-module",
                                            "patrol-state-d2",     "patrol-state-d3",         "assistant-single",
                                            "assistant-milestones"};
  return ids;
}

inline bool known_experiment(const std::string& id) {
  for (const auto& k : experiment_ids()) {
    if (k == id) return true;
  }
  return false;
}

struct ExperimentConfig {
  std::string id = "deliberation-single";
  std::uint64_t seed = 42;
  int train_episodes = 8000;
  int eval_episodes = 3000;
  std::vector<std::string> methods;
  std::string out;

  agents::QLearningConfig qlearning;
  eval::BootstrapConfig bootstrap;
  deliberation::DeliberationConfig deliberation;
  patrol::PatrolConfig patrol;
  assistant::AssistantConfig assistant;
  assistant::ScriptedTriage triage;

  bool is_deliberation() const { return id.rfind("deliberation-", 0) == 0; }
  bool is_patrol() const { return id.rfind("patrol-", 0) == 0; }
  bool is_assistant() const { return id.rfind("assistant-", 0) == 0; }
  bool sequential() const { return id == "deliberation-sequential"; }
  int patrol_depth() const { return id == "patrol-state-d2" ? 2 : id == "patrol-state-d3" ? 3 : 0; }
  bool trains() const { return !is_assistant(); }

  static ExperimentConfig defaults(const std::string& id) {
    if (!known_experiment(id)) throw std::invalid_argument("unknown experiment '" + id + "'");
    ExperimentConfig c;
    c.id = id;
    if (c.is_deliberation()) {
      c.deliberation = c.sequential() ? deliberation::DeliberationConfig::sequential()
                                      : deliberation::DeliberationConfig::single_task();
      c.qlearning.sample_average = true;
      c.methods = {"EP->EP", "EP->Step", "Step->Step", "Step->EP"};
    } else if (c.is_patrol()) {
      c.patrol = c.patrol_depth() == 0 ? patrol::PatrolConfig::module_level()
                                       : patrol::PatrolConfig::state_level(c.patrol_depth());
      c.methods = c.patrol_depth() == 0 ? std::vector<std::string>{"EP", "Loop"}
                                        : std::vector<std::string>{"EP", "PatchPro", "Patch", "Loop"};
    } else {
      c.assistant.decomposition =
          id == "assistant-single" ? assistant::Decomposition::single : assistant::Decomposition::milestones;
      c.train_episodes = 0;
      c.eval_episodes = 200;
      c.methods = {"EP", "PeriodicPoll", "AgentLoop"};
    }
    return c;
  }

  void validate() const {
    if (!known_experiment(id)) throw std::invalid_argument("unknown experiment '" + id + "'");
    if (train_episodes < 0) throw std::invalid_argument("train_episodes must be >= 0");
    if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
    qlearning.validate();
    bootstrap.validate();
    if (is_deliberation()) deliberation.validate();
    if (is_patrol()) {
      patrol.validate();
      const int depth = patrol_depth();
      if (depth == 0 && !patrol.phases.empty()) throw std::invalid_argument("patrol-module takes no phases");
      if (depth > 0 && static_cast<int>(patrol.phases.size()) != depth) {
        throw std::invalid_argument(id + " needs " + std::to_string(depth) + " phases");
      }
    }
    if (is_assistant()) assistant.validate();
    if (methods.empty()) throw std::invalid_argument("no methods listed");
    for (const auto& m : methods) {
      bool ok = false;
      for (const auto& k : ExperimentConfig::defaults(id).methods) ok = ok || k == m;
      if (!ok) throw std::invalid_argument("method '" + m + "' does not apply to " + id);
    }
  }
};

// -- value codecs -------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

inline double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + s + "' is not a number");
  }
  if (used != s.size()) throw std::invalid_argument("'" + s + "' is not a number");
  return v;
}

template <class Int>
Int to_int(const std::string& s) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("'" + s + "' is not an integer");
  return v;
}

inline bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("'" + s + "' is not true/false");
}

inline std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <std::size_t N>
std::array<double, N> to_array(const std::string& s) {
  const auto items = split(s, ',');
  if (items.size() != N) throw std::invalid_argument("expected " + std::to_string(N) + " comma-separated values");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = to_double(items[i]);
  return out;
}

template <class It>
std::string join(It first, It last, const std::function<std::string(const typename std::iterator_traits<It>::value_type&)>& f) {
  std::string out;
  for (It it = first; it != last; ++it) out += (it == first ? "" : ", ") + f(*it);
  return out;
}

template <std::size_t N>
std::string from_array(const std::array<double, N>& a) {
  return join(a.begin(), a.end(), std::function<std::string(const double&)>([](const double& v) { return fmt(v); }));
}

inline patrol::PhaseKind to_phase_kind(const std::string& s) {
  for (auto k : {patrol::PhaseKind::handle, patrol::PhaseKind::observe, patrol::PhaseKind::verify,
                 patrol::PhaseKind::commit}) {
    if (patrol::to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown phase '" + s + "'");
}

}  // namespace detail

struct Field {
  std::string name;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

struct Section {
  std::string name;
  std::vector<Field> fields;
};

namespace detail {

inline Field num(const std::string& name, double& v) {
  return {name, [&v](const std::string& s) { v = to_double(s); }, [&v] { return fmt(v); }};
}
template <class Int>
Field integer(const std::string& name, Int& v) {
  return {name, [&v](const std::string& s) { v = to_int<Int>(s); }, [&v] { return std::to_string(v); }};
}
inline Field flag(const std::string& name, bool& v) {
  return {name, [&v](const std::string& s) { v = to_bool(s); }, [&v] { return std::string(v ? "true" : "false"); }};
}
template <std::size_t N>
Field array(const std::string& name, std::array<double, N>& v) {
  return {name, [&v](const std::string& s) { v = to_array<N>(s); }, [&v] { return from_array(v); }};
}

}  // namespace detail

// Sections that apply to the experiment, bound to the config's fields.
inline std::vector<Section> sections(ExperimentConfig& c) {
  using namespace detail;
  std::vector<Section> out;
  out.push_back({"experiment",
                 {{"id", [&c](const std::string& s) {
                     if (s != c.id) throw std::invalid_argument("id is fixed to " + c.id + " once chosen");
                   },
                   [&c] { return c.id; }},
                  integer("seed", c.seed),
                  integer("train_episodes", c.train_episodes),
                  integer("eval_episodes", c.eval_episodes),
                  {"methods",
                   [&c](const std::string& s) {
                     c.methods.clear();
                     for (const auto& m : split(s, ',')) {
                       if (m.empty()) throw std::invalid_argument("empty method name");
                       c.methods.push_back(m);
                     }
                   },
                   [&c] {
                     return join(c.methods.begin(), c.methods.end(),
                                 std::function<std::string(const std::string&)>([](const std::string& m) { return m; }));
                   }},
                  {"out", [&c](const std::string& s) { c.out = s; }, [&c] { return c.out; }}}});
  if (c.trains()) {
    auto& q = c.qlearning;
    out.push_back({"qlearning",
                   {num("learning_rate", q.learning_rate), flag("sample_average", q.sample_average),
                    num("epsilon_start", q.epsilon_start), num("epsilon_end", q.epsilon_end),
                    integer("epsilon_decay_episodes", q.epsilon_decay_episodes)}});
  }
  out.push_back({"bootstrap",
                 {integer("resamples", c.bootstrap.resamples), num("level", c.bootstrap.level),
                  integer("seed", c.bootstrap.seed)}});
  if (c.is_deliberation()) {
    auto& d = c.deliberation;
    out.push_back({"deliberation",
                   {array("mode_durations_s", d.mode_durations_s), array("mode_alphas", d.mode_alphas),
                    num("beta", d.beta), array("slack_choices_s", d.slack_choices_s),
                    array("deadline_gaps_s", d.deadline_gaps_s), array("difficulty_bin_edges", d.difficulty_bin_edges),
                    array("urgency_edges_s", d.urgency_edges_s), num("reward_success", d.reward_success),
                    num("penalty_fail", d.penalty_fail), integer("tasks_per_episode", d.tasks_per_episode),
                    num("gamma_second", d.gamma_second), num("gamma_task", d.gamma_task),
                    integer("ticks_per_second", d.ticks_per_second)}});
  }
  if (c.is_patrol()) {
    auto& p = c.patrol;
    const std::string name = c.patrol_depth() == 0 ? "patrol.module" : "patrol.state.depth" + std::to_string(c.patrol_depth());
    std::vector<Field> f{
        integer("grid_size", p.grid_size),
        {"checkpoints",
         [&p](const std::string& s) {
           p.checkpoints.clear();
           for (const auto& item : split(s, ',')) {
             const auto w = words(item);
             if (w.size() != 2) throw std::invalid_argument("checkpoint '" + item + "' is not 'x y'");
             p.checkpoints.push_back({to_int<int>(w[0]), to_int<int>(w[1])});
           }
         },
         [&p] {
           return join(p.checkpoints.begin(), p.checkpoints.end(),
                       std::function<std::string(const patrol::Cell&)>([](const patrol::Cell& cell) {
                         return std::to_string(cell.x) + " " + std::to_string(cell.y);
                       }));
         }},
        integer("episode_ticks", p.episode_ticks),
        num("checkpoint_reward", p.checkpoint_reward),
        num("alarm_prob_per_tick", p.alarm_prob_per_tick),
        integer("alarm_min_distance", p.alarm_min_distance),
        {"deadline_range_ticks",
         [&p](const std::string& s) {
           const auto w = words(s);
           if (w.size() != 2) throw std::invalid_argument("expected 'lo hi'");
           p.deadline_lo = to_int<int>(w[0]);
           p.deadline_hi = to_int<int>(w[1]);
         },
         [&p] { return std::to_string(p.deadline_lo) + " " + std::to_string(p.deadline_hi); }},
        integer("resolve_ticks", p.resolve_ticks),
        num("alarm_reward", p.alarm_reward),
        num("expire_penalty", p.expire_penalty),
        num("active_tick_penalty", p.active_tick_penalty),
        num("gamma", p.gamma)};
    if (c.patrol_depth() == 0) {
      f.insert(f.begin() + 3, integer("handle_ticks", p.handle_ticks));
    } else {
      f.push_back({"phases",
                   [&p](const std::string& s) {
                     p.phases.clear();
                     for (const auto& item : split(s, ',')) {
                       const auto w = words(item);
                       if (w.size() != 3) throw std::invalid_argument("phase '" + item + "' is not 'name ticks cost'");
                       p.phases.push_back({to_phase_kind(w[0]), to_int<int>(w[1]), to_double(w[2])});
                     }
                   },
                   [&p] {
                     return join(p.phases.begin(), p.phases.end(),
                                 std::function<std::string(const patrol::PhaseSpec&)>([](const patrol::PhaseSpec& ph) {
                                   return patrol::to_string(ph.kind) + " " + std::to_string(ph.duration_ticks) + " " +
                                          fmt(ph.interrupt_cost);
                                 }));
                   }});
    }
    out.push_back({name, std::move(f)});
  }
  if (c.is_assistant()) {
    auto& a = c.assistant;
    out.push_back(
        {"assistant",
         {num("horizon", a.horizon), num("arrival_rate", a.arrival_rate), num("token_time_cost", a.token_time_cost),
          integer("main_target_units", a.main_target_units), array("urgency_probs", a.urgency_probs),
          {"slack_ranges",
           [&a](const std::string& s) {
             const auto items = split(s, ',');
             if (items.size() != 3) throw std::invalid_argument("expected three 'lo hi' ranges");
             for (std::size_t i = 0; i < 3; ++i) {
               const auto w = words(items[i]);
               if (w.size() != 2) throw std::invalid_argument("range '" + items[i] + "' is not 'lo hi'");
               a.slack_ranges[i] = {to_double(w[0]), to_double(w[1])};
             }
           },
           [&a] {
             std::string s;
             for (std::size_t i = 0; i < 3; ++i) {
               s += (i ? ", " : "") + fmt(a.slack_ranges[i][0]) + " " + fmt(a.slack_ranges[i][1]);
             }
             return s;
           }},
          num("check_inbox", a.check_inbox), num("open", a.open), num("handle", a.handle), num("reminder", a.reminder),
          num("return_to_main", a.return_to_main), num("triage", a.triage), num("polling_interval", a.polling_interval),
          integer("unit_tokens_lo", a.unit_tokens_lo), integer("unit_tokens_hi", a.unit_tokens_hi),
          num("reminder_lead", a.reminder_lead)}});
    out.push_back({"triage", {num("defer_slack", c.triage.defer_slack)}});
  }
  return out;
}

// -- parsing --------------------------------------------------------------------

struct IniLine {
  int line;
  std::string section;
  std::string key;
  std::string value;
};

inline std::vector<IniLine> read_ini(std::istream& in, const std::string& where) {
  std::vector<IniLine> out;
  std::string section;
  std::set<std::pair<std::string, std::string>> seen;
  std::string raw;
  for (int n = 1; std::getline(in, raw); ++n) {
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where, n, "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where, n, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where, n, "expected 'key = value'");
    if (section.empty()) throw ConfigError(where, n, "field outside any section");
    IniLine item{n, section, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1))};
    if (item.key.empty()) throw ConfigError(where, n, "empty field name");
    if (!seen.insert({section, item.key}).second) {
      throw ConfigError(where, n, "duplicate field '" + item.key + "' in [" + section + "]");
    }
    out.push_back(std::move(item));
  }
  return out;
}

// `fallback_id` names the experiment when the text has no [experiment] id.
inline ExperimentConfig parse_config(const std::string& text, const std::string& fallback_id = "",
                                     const std::string& where = "<config>") {
  std::istringstream in(text);
  const auto lines = read_ini(in, where);
  std::string id = fallback_id;
  for (const auto& l : lines) {
    if (l.section == "experiment" && l.key == "id") id = l.value;
  }
  if (id.empty()) throw ConfigError(where, 0, "no experiment id ([experiment] id or --experiment)");
  if (!known_experiment(id)) {
    int line = 0;
    for (const auto& l : lines) {
      if (l.section == "experiment" && l.key == "id") line = l.line;
    }
    throw ConfigError(where, line, "unknown experiment '" + id + "'");
  }
  ExperimentConfig cfg = ExperimentConfig::defaults(id);
  auto secs = sections(cfg);
  for (const auto& l : lines) {
    Section* sec = nullptr;
    for (auto& s : secs) {
      if (s.name == l.section) sec = &s;
    }
    if (!sec) throw ConfigError(where, l.line, "unknown section [" + l.section + "] for experiment " + id);
    Field* field = nullptr;
    for (auto& f : sec->fields) {
      if (f.name == l.key) field = &f;
    }
    if (!field) throw ConfigError(where, l.line, "unknown field '" + l.key + "' in [" + l.section + "]");
    try {
      field->set(l.value);
    } catch (const std::exception& e) {
      throw ConfigError(where, l.line, "field '" + l.key + "': " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(where, 0, e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, const std::string& fallback_id = "") {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), fallback_id, path);
}

// Every field of every applicable section, in a fixed order; parsing the
// result yields the same configuration.
inline std::string to_ini(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  std::ostringstream os;
  bool first = true;
  for (const auto& sec : sections(cfg)) {
    os << (first ? "" : "\n") << '[' << sec.name << "]\n";
    first = false;
    for (const auto& f : sec.fields) {
      const std::string v = f.get();
      if (f.name == "out" && v.empty()) continue;
      os << f.name << " = " << v << '\n';
    }
  }
  return os.str();
}

// -- hashing and manifests ----------------------------------------------------------

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_hash(const ExperimentConfig& cfg) { return hex(fnv1a(to_ini(cfg))); }

}  // namespace eplab::cli
