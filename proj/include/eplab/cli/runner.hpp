#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eplab/cli/config.hpp"
#include "eplab/core/trace_io.hpp"
#include "eplab/eval/experiments.hpp"
#include "eplab/render/trace_render.hpp"

// Command implementations. A command is a pure function of its Invocation
// (config, options and input files) producing named artifacts; the tool
// writes them, plus a manifest, under <out>/<experiment id>/.

namespace eplab::cli {

namespace fs = std::filesystem;

// Exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exit code 2 with a warning rather than an error.
class NoMatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Artifact {
  std::string name;
  std::string content;
};

struct InputFile {
  std::string path;
  std::string hash;
};

struct Invocation {
  std::string command;
  ExperimentConfig config;
  std::map<std::string, std::string> options;
  int workers = 1;  // never affects outputs
};

struct Outcome {
  std::vector<Artifact> artifacts;
  std::vector<InputFile> inputs;
  std::string stdout_text;
};

inline std::string default_out_dir() {
  const char* env = std::getenv("EP_LAB_OUT");
  return env && *env ? env : "results";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string option(const Invocation& inv, const std::string& key, const std::string& fallback = "") {
  auto it = inv.options.find(key);
  return it == inv.options.end() ? fallback : it->second;
}

inline int int_option(const Invocation& inv, const std::string& key, int fallback) {
  const std::string v = option(inv, key);
  if (v.empty()) return fallback;
  try {
    return detail::to_int<int>(v);
  } catch (const std::exception&) {
    throw UsageError("--" + key + ": '" + v + "' is not an integer");
  }
}

// "EP->Step" -> {"EP", "Step"}; other method names train and run as themselves.
inline std::pair<std::string, std::string> split_method(const std::string& m) {
  const auto arrow = m.find("->");
  if (arrow == std::string::npos) return {m, m};
  return {m.substr(0, arrow), m.substr(arrow + 2)};
}

inline std::string file_token(std::string m) {
  const auto arrow = m.find("->");
  if (arrow != std::string::npos) m.replace(arrow, 2, "-to-");
  return m;
}

inline bool method_learns(const ExperimentConfig& c, const std::string& m) {
  if (c.is_deliberation()) return true;
  if (c.is_patrol()) return m == "EP" || m == "Loop";
  return false;
}

// Table settings the listed methods need, in first-use order.
inline std::vector<std::string> learned_settings(const ExperimentConfig& c) {
  std::vector<std::string> out;
  for (const auto& m : c.methods) {
    if (!method_learns(c, m)) continue;
    const std::string s = split_method(m).first;
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

inline eval::PatrolMethod patrol_method(const std::string& m) {
  if (m == "EP") return eval::PatrolMethod::ep;
  if (m == "Loop") return eval::PatrolMethod::loop;
  if (m == "Patch") return eval::PatrolMethod::patch;
  if (m == "PatchPro") return eval::PatrolMethod::patchpro;
  throw UsageError("unknown patrol method '" + m + "'");
}

inline assistant::Interface assistant_interface(const std::string& m) {
  if (m == "EP") return assistant::Interface::ep;
  if (m == "PeriodicPoll") return assistant::Interface::periodic_poll;
  if (m == "AgentLoop") return assistant::Interface::agent_loop;
  throw UsageError("unknown assistant interface '" + m + "'");
}

inline agents::QLearningConfig learner(const ExperimentConfig& c) {
  agents::QLearningConfig q = c.qlearning;
  q.training_episodes = c.train_episodes;
  q.seed = c.seed;
  return q;
}

inline agents::QTable train_setting(const ExperimentConfig& c, const std::string& setting, agents::TrainLog* log) {
  if (c.is_deliberation()) {
    return eval::train_deliberation(c.deliberation, c.sequential(), eval::parse_semantics(setting), learner(c), log);
  }
  if (c.is_patrol()) return eval::train_patrol(c.patrol, c.patrol_depth(), patrol_method(setting), learner(c), log);
  throw UsageError(c.id + " has no learned policies");
}

inline std::string training_log_csv(const agents::TrainLog& log) {
  std::ostringstream os;
  os << "episodes,mean_return\n";
  char buf[40];
  for (std::size_t i = 0; i < log.block_mean_returns.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", log.block_mean_returns[i]);
    os << (i + 1) * 1000 << ',' << buf << '\n';
  }
  return os.str();
}

inline std::string table_text(const agents::QTable& t) {
  std::ostringstream os;
  t.write(os);
  return os.str();
}

// Table for `setting`: the table.<setting> option's file, else trained now.
inline agents::QTable obtain_table(const Invocation& inv, const std::string& setting, Outcome& out) {
  const std::string path = option(inv, "table." + setting);
  if (path.empty()) return train_setting(inv.config, setting, nullptr);
  const std::string text = read_file(path);
  out.inputs.push_back({path, hex(fnv1a(text))});
  try {
    return agents::QTable::from_string(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// -- commands -------------------------------------------------------------------

inline Outcome cmd_train(const Invocation& inv) {
  const auto& c = inv.config;
  if (!c.trains()) throw UsageError(c.id + " has no learned policies; nothing to train");
  Outcome out;
  for (const auto& s : learned_settings(c)) {
    agents::TrainLog log;
    const auto table = train_setting(c, s, &log);
    out.artifacts.push_back({"qtable-" + s + ".txt", table_text(table)});
    out.artifacts.push_back({"trainlog-" + s + ".csv", training_log_csv(log)});
    out.stdout_text += "trained " + s + ": " + std::to_string(table.size()) + " states\n";
  }
  return out;
}

struct EvalResult {
  std::vector<eval::MetricsRow> rows;
  std::string modes_md;
};

inline EvalResult evaluate(const Invocation& inv, Outcome& out) {
  const auto& c = inv.config;
  EvalResult r;
  std::map<std::string, agents::QTable> tables;
  for (const auto& s : learned_settings(c)) tables.emplace(s, obtain_table(inv, s, out));
  for (const auto& m : c.methods) {
    std::vector<eval::EpisodeSummary> eps;
    if (c.is_deliberation()) {
      const auto [train, run] = split_method(m);
      eps = eval::run_deliberation(c.deliberation, c.sequential(), eval::parse_semantics(run), tables.at(train),
                                   c.eval_episodes, c.seed, inv.workers);
      r.rows.push_back(eval::compute_metrics(eval::EnvKind::deliberation, c.id + "/" + run, train + " -> " + run, eps,
                                             c.bootstrap));
      r.modes_md += "### " + train + " -> " + run + "\n\n" + eval::mode_distribution_markdown(
                                                                   eval::mode_distribution_by_urgency(eps)) + "\n";
    } else if (c.is_patrol()) {
      const auto pm = patrol_method(m);
      const agents::QTable* t = eval::learned(pm) ? &tables.at(m) : nullptr;
      eps = eval::run_patrol(c.patrol, c.patrol_depth(), pm, t, c.eval_episodes, c.seed, inv.workers);
      r.rows.push_back(eval::compute_metrics(eval::EnvKind::patrol, c.id, m, eps, c.bootstrap));
    } else {
      eps = eval::run_assistant(c.assistant, assistant_interface(m), c.triage, c.eval_episodes, c.seed, inv.workers);
      r.rows.push_back(eval::compute_metrics(eval::EnvKind::assistant, c.id, m, eps, c.bootstrap));
    }
  }
  return r;
}

inline eval::EnvKind env_kind(const ExperimentConfig& c) {
  return c.is_deliberation() ? eval::EnvKind::deliberation
         : c.is_patrol()     ? eval::EnvKind::patrol
                             : eval::EnvKind::assistant;
}

inline std::string table_markdown(const ExperimentConfig& c, const std::vector<eval::MetricsRow>& rows) {
  const auto cols = eval::table_columns(env_kind(c), c.patrol_depth() > 0);
  return eval::to_markdown(rows, cols, c.is_assistant() ? "Interface" : "Method");
}

// eval and cross-eval share one implementation; every listed method is a
// row, including train/eval mismatches for deliberation.
inline Outcome cmd_eval(const Invocation& inv) {
  Outcome out;
  const auto r = evaluate(inv, out);
  const std::string csv = eval::to_csv(r.rows);
  const std::string md = table_markdown(inv.config, r.rows);
  out.artifacts.push_back({inv.command + "-metrics.csv", csv});
  out.artifacts.push_back({inv.command + "-table.md", md});
  if (!r.modes_md.empty()) out.artifacts.push_back({inv.command + "-modes.md", r.modes_md});
  out.stdout_text = option(inv, "format", "md") == "csv" ? csv : md;
  return out;
}

inline EpisodeTrace make_trace(const Invocation& inv, const std::string& method, std::size_t index, Outcome& out) {
  const auto& c = inv.config;
  const std::uint64_t seed = episode_seed(eval::evaluation_base(c.seed), index);
  if (std::find(c.methods.begin(), c.methods.end(), method) == c.methods.end()) {
    throw UsageError("method '" + method + "' is not listed for " + c.id);
  }
  if (c.is_deliberation()) {
    const auto [train, run] = split_method(method);
    const auto table = obtain_table(inv, train, out);
    const auto env = eval::deliberation_env(c.deliberation, c.sequential(), eval::parse_semantics(run));
    eval::check_alphabet(table, deliberation::Learning::kActions, 2, env.name);
    agents::QPolicy<deliberation::Learning> policy(table, DecisionGate::every_tick);
    return run_episode(env, policy, deliberation::Extractor{}, seed, RunOptions{true});
  }
  if (c.is_patrol()) {
    const auto pm = patrol_method(method);
    std::optional<agents::QTable> table;
    if (eval::learned(pm)) table = obtain_table(inv, method, out);
    return eval::patrol_trace(c.patrol, c.patrol_depth(), pm, table ? &*table : nullptr, c.seed, index);
  }
  return assistant::simulate_assistant(c.assistant, assistant_interface(method), c.triage, seed, RunOptions{true});
}

inline Outcome cmd_trace(const Invocation& inv) {
  Outcome out;
  const std::string method = option(inv, "method", inv.config.methods.front());
  const int index = int_option(inv, "episode", 0);
  if (index < 0) throw UsageError("--episode must be >= 0");
  const auto tr = make_trace(inv, method, static_cast<std::size_t>(index), out);
  out.artifacts.push_back({"trace-" + file_token(method) + "-" + std::to_string(index) + ".jsonl", trace_to_string(tr)});
  out.stdout_text = out.artifacts.back().name + "\n";
  return out;
}

inline Outcome cmd_render(const Invocation& inv) {
  Outcome out;
  EpisodeTrace tr;
  const std::string path = option(inv, "trace");
  std::string stem;
  if (!path.empty()) {
    const std::string text = read_file(path);
    out.inputs.push_back({path, hex(fnv1a(text))});
    std::istringstream in(text);
    tr = read_trace(in);
    stem = fs::path(path).stem().string();
  } else {
    if (!inv.config.is_patrol()) throw UsageError("render needs --trace or a patrol experiment");
    const std::string method = option(inv, "method", inv.config.methods.front());
    const int index = int_option(inv, "episode", 0);
    tr = make_trace(inv, method, static_cast<std::size_t>(std::max(index, 0)), out);
    stem = "trace-" + file_token(method) + "-" + std::to_string(std::max(index, 0));
  }
  const int panels = int_option(inv, "panels", 5);
  const bool svg = option(inv, "style", "ascii") == "svg";
  Tick start = int_option(inv, "start", 0);
  const std::string crit = option(inv, "criterion");
  if (!crit.empty()) {
    const auto criterion = render::parse_criterion(crit);
    if (!criterion) throw UsageError("unknown criterion '" + crit + "'");
    const auto hit = render::find_first_event(tr, *criterion);
    if (!hit) throw NoMatch("no tick meets " + crit);
    const Tick last = static_cast<Tick>(tr.ticks.size()) - panels;
    start = std::max<Tick>(0, std::min(*hit, last));
  }
  std::string doc;
  try {
    doc = render::render_window(tr, start, panels, svg ? render::Format::svg : render::Format::ascii);
  } catch (const std::out_of_range& e) {
    throw UsageError(e.what());
  }
  out.artifacts.push_back({"render-" + stem + "-" + std::to_string(start) + (svg ? ".svg" : ".txt"), doc});
  out.stdout_text = svg ? out.artifacts.back().name + "\n" : doc;
  return out;
}

// One Markdown file per result table, assembled from whatever metrics CSVs
// exist under the output root.
inline Outcome cmd_report(const Invocation& inv) {
  Outcome out;
  const fs::path root = option(inv, "root");
  auto load = [&](const std::string& id) -> std::optional<std::vector<eval::MetricsRow>> {
    for (const char* name : {"cross-eval-metrics.csv", "eval-metrics.csv"}) {
      const fs::path p = root / id / name;
      if (fs::exists(p)) {
        const std::string text = read_file(p.string());
        out.inputs.push_back({p.string(), hex(fnv1a(text))});
        return eval::from_csv(text);
      }
    }
    return std::nullopt;
  };
  auto with_setting = [](std::vector<eval::MetricsRow> rows, const std::string& label) {
    for (auto& r : rows) r.method = label + " / " + r.method;
    return rows;
  };
  for (const std::string id : {"deliberation-single", "deliberation-sequential", "patrol-module"}) {
    if (auto rows = load(id)) {
      const auto c = ExperimentConfig::defaults(id);
      out.artifacts.push_back({id + ".md", "## " + id + "\n\n" + table_markdown(c, *rows)});
    }
  }
  std::vector<eval::MetricsRow> depth_rows;
  for (const std::string id : {"patrol-state-d2", "patrol-state-d3"}) {
    if (auto rows = load(id)) {
      const auto labelled = with_setting(*rows, id == "patrol-state-d2" ? "depth 2" : "depth 3");
      depth_rows.insert(depth_rows.end(), labelled.begin(), labelled.end());
    }
  }
  if (!depth_rows.empty()) {
    out.artifacts.push_back({"patrol-state.md", "## patrol-state\n\n" + eval::to_markdown(depth_rows,
                                                  eval::table_columns(eval::EnvKind::patrol, true), "Depth / Method")});
  }
  std::vector<eval::MetricsRow> asst;
  for (const std::string id : {"assistant-single", "assistant-milestones"}) {
    if (auto rows = load(id)) {
      const auto labelled = with_setting(*rows, id == "assistant-single" ? "single" : "milestones");
      asst.insert(asst.end(), labelled.begin(), labelled.end());
    }
  }
  if (!asst.empty()) {
    out.artifacts.push_back({"assistant.md", "## assistant\n\n" + eval::to_markdown(asst,
                                               eval::table_columns(eval::EnvKind::assistant), "Setting / Interface")});
  }
  if (out.artifacts.empty()) throw std::runtime_error("no metrics CSVs found under " + root.string());
  for (const auto& a : out.artifacts) out.stdout_text += a.content + "\n";
  return out;
}

inline Outcome execute(const Invocation& inv) {
  if (inv.command == "train") return cmd_train(inv);
  if (inv.command == "eval" || inv.command == "cross-eval") return cmd_eval(inv);
  if (inv.command == "trace") return cmd_trace(inv);
  if (inv.command == "render") return cmd_render(inv);
  if (inv.command == "report") return cmd_report(inv);
  throw UsageError("unknown command '" + inv.command + "'");
}

// -- manifests ------------------------------------------------------------------

// Options that only locate files are kept in the manifest but do not change
// what a command computes, except through the recorded input hashes.
inline nlohmann::json manifest(const Invocation& inv, const Outcome& out) {
  using nlohmann::json;
  json m;
  m["tool"] = "eplab";
  m["version"] = kVersion;
  m["command"] = inv.command;
  m["experiment"] = inv.config.id;
  m["seed"] = inv.config.seed;
  m["config_hash"] = config_hash(inv.config);
  m["config"] = to_ini(inv.config);
  m["options"] = inv.options;
  json inputs = json::array();
  for (const auto& i : out.inputs) inputs.push_back({{"path", i.path}, {"fnv1a", i.hash}});
  m["inputs"] = inputs;
  json outputs = json::array();
  for (const auto& a : out.artifacts) outputs.push_back({{"file", a.name}, {"fnv1a", hex(fnv1a(a.content))}});
  m["outputs"] = outputs;
  return m;
}

inline Invocation invocation_from_manifest(const nlohmann::json& m) {
  if (m.value("tool", "") != "eplab") throw UsageError("not an eplab manifest");
  Invocation inv;
  inv.command = m.at("command").get<std::string>();
  inv.config = parse_config(m.at("config").get<std::string>(), "", "<manifest config>");
  if (config_hash(inv.config) != m.at("config_hash").get<std::string>()) {
    throw std::runtime_error("manifest config does not match its hash");
  }
  inv.options = m.at("options").get<std::map<std::string, std::string>>();
  return inv;
}

struct ReplayLine {
  std::string file;
  std::string expected;
  std::string actual;
  bool ok() const { return expected == actual; }
};

struct ReplayReport {
  std::vector<ReplayLine> lines;
  Outcome outcome;
  bool ok() const {
    return !lines.empty() && std::all_of(lines.begin(), lines.end(), [](const ReplayLine& l) { return l.ok(); });
  }
};

inline ReplayReport replay(const nlohmann::json& m, int workers) {
  Invocation inv = invocation_from_manifest(m);
  inv.workers = workers;
  for (const auto& in : m.at("inputs")) {
    const std::string path = in.at("path").get<std::string>();
    if (hex(fnv1a(read_file(path))) != in.at("fnv1a").get<std::string>()) {
      throw std::runtime_error("input " + path + " changed since the manifest was written");
    }
  }
  ReplayReport r;
  r.outcome = execute(inv);
  std::map<std::string, std::string> produced;
  for (const auto& a : r.outcome.artifacts) produced[a.name] = hex(fnv1a(a.content));
  for (const auto& o : m.at("outputs")) {
    const std::string file = o.at("file").get<std::string>();
    auto it = produced.find(file);
    r.lines.push_back({file, o.at("fnv1a").get<std::string>(), it == produced.end() ? "missing" : it->second});
  }
  return r;
}

// Points every learned setting without an explicit table at
// <dir>/qtable-<setting>.txt when that file exists, so the manifest names
// every file a command reads.
inline void adopt_saved_tables(Invocation& inv, const fs::path& dir) {
  for (const auto& s : learned_settings(inv.config)) {
    const fs::path p = dir / ("qtable-" + s + ".txt");
    if (!inv.options.count("table." + s) && fs::exists(p)) inv.options["table." + s] = p.string();
  }
}

// Writes artifacts and manifest-<command>.json into `dir`.
inline std::string write_outcome(const fs::path& dir, const Invocation& inv, const Outcome& out) {
  for (const auto& a : out.artifacts) write_file(dir / a.name, a.content);
  const fs::path mpath = dir / ("manifest-" + inv.command + ".json");
  write_file(mpath, manifest(inv, out).dump(2) + "\n");
  return mpath.string();
}

}  // namespace eplab::cli
