#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/agents/patch.hpp"
#include "eplab/agents/qlearning.hpp"
#include "eplab/envs/assistant.hpp"
#include "eplab/envs/deliberation.hpp"
#include "eplab/envs/patrol.hpp"
#include "eplab/eval/metrics.hpp"
#include "eplab/eval/parallel.hpp"

namespace eplab::eval {

class AlphabetMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Evaluation episodes never reuse training seeds.
constexpr std::uint64_t evaluation_base(std::uint64_t seed) { return mix_seed(seed, 0xE7A1); }

template <class Fn>
std::vector<EpisodeSummary> run_batch(int episodes, std::uint64_t seed, int workers, Fn run_one) {
  const std::uint64_t base = evaluation_base(seed);
  return parallel_map<EpisodeSummary>(static_cast<std::size_t>(episodes), workers, [&](std::size_t i) {
    return summarize(run_one(episode_seed(base, i)));
  });
}

// -- deliberation -------------------------------------------------------------

namespace delib = eplab::deliberation;

inline std::string to_string(delib::Semantics s) { return s == delib::Semantics::ep ? "EP" : "Step"; }

inline ProcessSpec<delib::DeliberationState> deliberation_env(const delib::DeliberationConfig& cfg, bool sequential,
                                                              delib::Semantics sem) {
  return sequential ? delib::make_sequential_env(cfg, sem) : delib::make_single_task_env(cfg, sem);
}

// Learner settings per semantics: ticks are discounted only where
// deliberation takes time, and each further task by gamma_task.
inline agents::QLearningConfig deliberation_learner(const delib::DeliberationConfig& cfg, bool sequential,
                                                    delib::Semantics sem, agents::QLearningConfig q) {
  q.gamma = deliberation_env(cfg, sequential, sem).gamma_tick;
  q.decision_gamma = cfg.gamma_task;
  return q;
}

inline agents::QTable train_deliberation(const delib::DeliberationConfig& cfg, bool sequential, delib::Semantics sem,
                                         const agents::QLearningConfig& q, agents::TrainLog* log = nullptr) {
  const auto env = deliberation_env(cfg, sequential, sem);
  return agents::train<delib::Learning>(env, delib::Extractor{}, DecisionGate::every_tick,
                                        deliberation_learner(cfg, sequential, sem, q), log);
}

inline void check_alphabet(const agents::QTable& table, int n_actions, std::size_t key_size, const std::string& env) {
  if (table.n_actions() != n_actions) {
    throw AlphabetMismatch("table has " + std::to_string(table.n_actions()) + " actions, " + env + " expects " +
                           std::to_string(n_actions));
  }
  for (const auto& [key, row] : table.rows()) {
    if (key.size() != key_size) {
      throw AlphabetMismatch("table key of length " + std::to_string(key.size()) + " does not fit " + env +
                             " (expects " + std::to_string(key_size) + ")");
    }
  }
}

inline std::vector<EpisodeSummary> run_deliberation(const delib::DeliberationConfig& cfg, bool sequential,
                                                    delib::Semantics sem, const agents::QTable& table, int episodes,
                                                    std::uint64_t seed, int workers) {
  const auto env = deliberation_env(cfg, sequential, sem);
  check_alphabet(table, delib::Learning::kActions, 2, env.name);
  return run_batch(episodes, seed, workers, [&](std::uint64_t s) {
    agents::QPolicy<delib::Learning> policy(table, DecisionGate::every_tick);
    return run_episode(env, policy, delib::Extractor{}, s, RunOptions{false});
  });
}

// -- patrol -----------------------------------------------------------------

enum class PatrolMethod { ep, loop, patch, patchpro };

inline std::string to_string(PatrolMethod m) {
  switch (m) {
    case PatrolMethod::ep: return "EP";
    case PatrolMethod::loop: return "Loop";
    case PatrolMethod::patch: return "Patch";
    case PatrolMethod::patchpro: return "PatchPro";
  }
  return "?";
}

inline bool learned(PatrolMethod m) { return m == PatrolMethod::ep || m == PatrolMethod::loop; }
inline DecisionGate gate_of(PatrolMethod m) {
  return m == PatrolMethod::loop ? DecisionGate::boundary_only : DecisionGate::every_tick;
}

// depth 0 is the module-level environment.
inline ProcessSpec<patrol::PatrolState> patrol_env(const patrol::PatrolConfig& cfg, int depth) {
  return depth == 0 ? patrol::module_level_env(cfg) : patrol::state_level_env(cfg, depth);
}

inline agents::QTable train_patrol(const patrol::PatrolConfig& cfg, int depth, PatrolMethod method,
                                   agents::QLearningConfig q, agents::TrainLog* log = nullptr) {
  if (!learned(method)) throw std::invalid_argument(to_string(method) + " is not a learned method");
  q.gamma = cfg.gamma;
  return agents::train<patrol::Learning>(patrol_env(cfg, depth), patrol::Extractor{}, gate_of(method), q, log);
}

template <class Run>
auto with_patrol_policy(const patrol::PatrolConfig& cfg, int depth, PatrolMethod method, const agents::QTable* table,
                        Run run) {
  switch (method) {
    case PatrolMethod::ep:
    case PatrolMethod::loop: {
      if (!table) throw std::invalid_argument(to_string(method) + " needs a trained table");
      agents::QPolicy<patrol::Learning> p(*table, gate_of(method));
      return run(p);
    }
    case PatrolMethod::patch: {
      agents::PatchAgent p{depth, cfg.effective_phases()};
      return run(p);
    }
    case PatrolMethod::patchpro: {
      agents::PatchProAgent p{depth, cfg.effective_phases(), cfg.resolve_ticks};
      return run(p);
    }
  }
  throw std::logic_error("unreachable");
}

inline std::vector<EpisodeSummary> run_patrol(const patrol::PatrolConfig& cfg, int depth, PatrolMethod method,
                                              const agents::QTable* table, int episodes, std::uint64_t seed,
                                              int workers) {
  const auto env = patrol_env(cfg, depth);
  if (table) check_alphabet(*table, patrol::Learning::kActions, 5, env.name);
  return run_batch(episodes, seed, workers, [&](std::uint64_t s) {
    return with_patrol_policy(cfg, depth, method, table, [&](auto& p) {
      return run_episode(env, p, patrol::Extractor{}, s, RunOptions{false});
    });
  });
}

// Recorded evaluation episode `index` of the batch run_patrol would produce.
inline EpisodeTrace patrol_trace(const patrol::PatrolConfig& cfg, int depth, PatrolMethod method,
                                 const agents::QTable* table, std::uint64_t seed, std::size_t index = 0) {
  const auto env = patrol_env(cfg, depth);
  return with_patrol_policy(cfg, depth, method, table, [&](auto& p) {
    return run_episode(env, p, patrol::Extractor{}, episode_seed(evaluation_base(seed), index), RunOptions{true});
  });
}

// -- assistant ----------------------------------------------------------------

inline std::vector<EpisodeSummary> run_assistant(const assistant::AssistantConfig& cfg, assistant::Interface interface,
                                                 const assistant::ScriptedTriage& triage, int episodes,
                                                 std::uint64_t seed, int workers) {
  cfg.validate();
  return run_batch(episodes, seed, workers, [&](std::uint64_t s) {
    return assistant::simulate_assistant(cfg, interface, triage, s, RunOptions{false});
  });
}

// -- cross-evaluation ---------------------------------------------------------

// Env ids: deliberation-single/EP, deliberation-sequential/Step,
// patrol-module/EP, patrol-state-d2/Loop, ...
struct EnvId {
  std::string family;  // deliberation-single, patrol-state-d3, ...
  std::string interface;

  static EnvId parse(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos) throw std::invalid_argument("env id '" + s + "' lacks '/<interface>'");
    return {s.substr(0, slash), s.substr(slash + 1)};
  }
  std::string str() const { return family + "/" + interface; }
  bool deliberation() const { return family.rfind("deliberation-", 0) == 0; }
  bool patrol() const { return family.rfind("patrol-", 0) == 0; }
};

struct CrossEvalSettings {
  delib::DeliberationConfig deliberation = delib::DeliberationConfig::single_task();
  patrol::PatrolConfig patrol = patrol::PatrolConfig::module_level();
  BootstrapConfig bootstrap{};
  int workers = 1;
};

inline delib::Semantics parse_semantics(const std::string& s) {
  if (s == "EP") return delib::Semantics::ep;
  if (s == "Step") return delib::Semantics::step;
  throw std::invalid_argument("unknown deliberation semantics '" + s + "'");
}

inline int patrol_depth(const std::string& family) {
  if (family == "patrol-module") return 0;
  if (family == "patrol-state-d2") return 2;
  if (family == "patrol-state-d3") return 3;
  throw std::invalid_argument("unknown patrol environment '" + family + "'");
}

// Greedy evaluation of a trained table in another (or the same) setting.
inline MetricsRow cross_eval(const agents::QTable& trained, const std::string& train_env_id,
                             const std::string& eval_env_id, int episodes, std::uint64_t seed,
                             const CrossEvalSettings& st = {}) {
  const EnvId train = EnvId::parse(train_env_id);
  const EnvId eval = EnvId::parse(eval_env_id);
  if (train.deliberation() != eval.deliberation() || train.patrol() != eval.patrol()) {
    throw AlphabetMismatch("cannot evaluate a " + train.family + " table in " + eval.family);
  }
  const std::string method = train.interface + " -> " + eval.interface;
  if (eval.deliberation()) {
    const bool sequential = eval.family == "deliberation-sequential";
    if (!sequential && eval.family != "deliberation-single") {
      throw std::invalid_argument("unknown deliberation environment '" + eval.family + "'");
    }
    const auto eps = run_deliberation(st.deliberation, sequential, parse_semantics(eval.interface), trained, episodes,
                                      seed, st.workers);
    return compute_metrics(EnvKind::deliberation, eval.str(), method, eps, st.bootstrap);
  }
  if (eval.patrol()) {
    const int depth = patrol_depth(eval.family);
    PatrolMethod m;
    if (eval.interface == "EP") {
      m = PatrolMethod::ep;
    } else if (eval.interface == "Loop") {
      m = PatrolMethod::loop;
    } else {
      throw std::invalid_argument("unknown patrol interface '" + eval.interface + "'");
    }
    const auto eps = run_patrol(st.patrol, depth, m, &trained, episodes, seed, st.workers);
    return compute_metrics(EnvKind::patrol, eval.str(), method, eps, st.bootstrap);
  }
  throw std::invalid_argument("no cross-evaluation for '" + eval.family + "'");
}

}  // namespace eplab::eval
