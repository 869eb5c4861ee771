#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/core/process.hpp"

namespace eplab::agents {

using StateKey = std::vector<int>;

class QTable {
 public:
  explicit QTable(int n_actions = 0) : n_actions_(n_actions) {}

  int n_actions() const { return n_actions_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::map<StateKey, std::vector<double>>& rows() const { return rows_; }

  // Unvisited keys read as zero rows.
  double get(const StateKey& key, int a) const {
    auto it = rows_.find(key);
    return it == rows_.end() ? 0.0 : it->second[static_cast<std::size_t>(a)];
  }
  std::vector<double>& row(const StateKey& key) {
    auto it = rows_.find(key);
    if (it == rows_.end()) it = rows_.emplace(key, std::vector<double>(static_cast<std::size_t>(n_actions_), 0.0)).first;
    return it->second;
  }
  const std::vector<double>* find(const StateKey& key) const {
    auto it = rows_.find(key);
    return it == rows_.end() ? nullptr : &it->second;
  }

  friend bool operator==(const QTable&, const QTable&) = default;

  // Text format:
  //   qtable <n_actions> <n_rows>
  //   <k0>,<k1>,... : <v0> <v1> ...
  // Values are written with 17 significant digits, so a round trip is exact.
  void write(std::ostream& out) const {
    out << "qtable " << n_actions_ << ' ' << rows_.size() << '\n';
    char buf[32];
    for (const auto& [key, vals] : rows_) {
      for (std::size_t i = 0; i < key.size(); ++i) out << (i ? "," : "") << key[i];
      out << " :";
      for (double v : vals) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ' ' << buf;
      }
      out << '\n';
    }
  }
  std::string to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  static QTable read(std::istream& in) {
    std::string magic;
    int n_actions = 0;
    std::size_t n_rows = 0;
    if (!(in >> magic >> n_actions >> n_rows) || magic != "qtable" || n_actions <= 0) {
      throw std::runtime_error("qtable: bad header");
    }
    QTable q(n_actions);
    std::string line;
    std::getline(in, line);
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (!std::getline(in, line)) throw std::runtime_error("qtable: expected " + std::to_string(n_rows) + " rows");
      const auto colon = line.find(':');
      if (colon == std::string::npos) throw std::runtime_error("qtable: row " + std::to_string(r + 1) + " lacks ':'");
      StateKey key;
      std::string kpart = line.substr(0, colon);
      std::replace(kpart.begin(), kpart.end(), ',', ' ');
      std::istringstream ks(kpart);
      for (int k; ks >> k;) key.push_back(k);
      std::istringstream vs(line.substr(colon + 1));
      std::vector<double> vals;
      for (std::string tok; vs >> tok;) vals.push_back(std::stod(tok));
      if (vals.size() != static_cast<std::size_t>(n_actions)) {
        throw std::runtime_error("qtable: row " + std::to_string(r + 1) + " has wrong width");
      }
      q.rows_[key] = std::move(vals);
    }
    return q;
  }
  static QTable from_string(const std::string& s) {
    std::istringstream is(s);
    return read(is);
  }
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write(out);
  }
  static QTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read(in);
  }

 private:
  int n_actions_;
  std::map<StateKey, std::vector<double>> rows_;
};

struct QLearningConfig {
  double learning_rate = 0.1;
  bool sample_average = false;      // step size 1/n(key, action) instead of learning_rate
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_episodes = -1;  // -1: 80% of training_episodes
  double gamma = 0.99;              // per-tick discount
  double decision_gamma = 1.0;      // extra factor per decision
  int training_episodes = 8000;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw std::invalid_argument("learning_rate must lie in (0,1]");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
      throw std::invalid_argument("epsilons must lie in [0,1]");
    }
    if (!(gamma > 0.0 && gamma <= 1.0) || !(decision_gamma > 0.0 && decision_gamma <= 1.0)) {
      throw std::invalid_argument("discounts must lie in (0,1]");
    }
    if (training_episodes < 0) throw std::invalid_argument("training_episodes must be >= 0");
  }
  int decay_episodes() const {
    return epsilon_decay_episodes >= 0 ? epsilon_decay_episodes : (training_episodes * 4) / 5;
  }
};

// Linear decay from epsilon_start to epsilon_end over decay_episodes(),
// constant afterwards.
inline double epsilon_at(int episode, const QLearningConfig& cfg) {
  const int decay = cfg.decay_episodes();
  if (episode >= decay || decay <= 0) return cfg.epsilon_end;
  const double frac = static_cast<double>(episode) / decay;
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

// Q(key,a) <- Q + lr * (r + gamma * max Q(next,.) * (1 - done) - Q)
inline double q_update(QTable& q, const StateKey& key, int action, double reward, const StateKey& next_key, bool done,
                       double learning_rate, double gamma) {
  double next_max = 0.0;
  if (!done) {
    if (const auto* row = q.find(next_key)) next_max = *std::max_element(row->begin(), row->end());
  }
  double& v = q.row(key)[static_cast<std::size_t>(action)];
  v += learning_rate * (reward + gamma * next_max - v);
  return v;
}

// Discrete coding the learner needs from an environment.
template <class L>
concept LearningInterface = requires(const typename L::Info& w, const InterventionSet& a) {
  { L::key(w) } -> std::convertible_to<StateKey>;
  { L::action_index(a) } -> std::convertible_to<int>;
  { L::kActions } -> std::convertible_to<int>;
};

// Epsilon-greedy tabular policy. A tick is a choice point only when the
// menu offers more than one set. While learning, the value of each choice is
// backed up when the next choice point (or the episode end) is reached, with
// the rewards in between discounted per tick, i.e. an SMDP-style update that
// maximises over the sets admissible at the next choice point.
template <LearningInterface L>
class QPolicy {
 public:
  using Info = typename L::Info;

  // Greedy, read-only.
  QPolicy(const QTable& table, DecisionGate gate) : read_(&table), gate_(gate) {}
  // Learning.
  QPolicy(QTable& table, DecisionGate gate, const QLearningConfig& cfg)
      : read_(&table), write_(&table), gate_(gate), cfg_(cfg) {}

  DecisionGate gate() const { return gate_; }
  void set_epsilon(double e) { epsilon_ = e; }

  InterventionSet decide(const Info& w, std::span<const InterventionSet> menu, Tick, Rng& rng) {
    if (menu.empty()) return {};
    if (menu.size() == 1) return menu.front();
    StateKey key = L::key(w);
    std::size_t pick = 0;
    if (write_ && epsilon_ > 0.0 && rng.uniform() < epsilon_) {
      pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(menu.size()) - 1));
    } else {
      pick = greedy(key, menu);
    }
    if (write_) {
      const double best_next = best_value(key, menu);
      backup(best_next, false);
      pending_ = Pending{std::move(key), L::action_index(menu[pick]), 0.0, 1.0};
    }
    return menu[pick];
  }

  void after_step(const Info&, const UtilityList& us, Tick) {
    if (!pending_) return;
    pending_->reward += pending_->discount * utility_sum(us);
    pending_->discount *= cfg_.gamma;
  }

  void end_episode(const Info&) {
    if (write_) backup(0.0, true);
    pending_.reset();
  }

 private:
  struct Pending {
    StateKey key;
    int action;
    double reward;
    double discount;
  };

  // Lowest action index wins ties.
  std::size_t greedy(const StateKey& key, std::span<const InterventionSet> menu) const {
    std::size_t best = 0;
    int best_index = -1;
    double best_v = 0.0;
    const auto* row = read_->find(key);
    for (std::size_t i = 0; i < menu.size(); ++i) {
      const int a = L::action_index(menu[i]);
      const double v = row ? (*row)[static_cast<std::size_t>(a)] : 0.0;
      if (best_index < 0 || v > best_v || (v == best_v && a < best_index)) {
        best = i;
        best_index = a;
        best_v = v;
      }
    }
    return best;
  }
  double best_value(const StateKey& key, std::span<const InterventionSet> menu) const {
    const auto* row = read_->find(key);
    if (!row) return 0.0;
    double best = -1e300;
    for (const auto& set : menu) best = std::max(best, (*row)[static_cast<std::size_t>(L::action_index(set))]);
    return best;
  }
  void backup(double best_next, bool done) {
    if (!pending_) return;
    const double target = pending_->reward + (done ? 0.0 : pending_->discount * cfg_.decision_gamma * best_next);
    const auto a = static_cast<std::size_t>(pending_->action);
    double& v = write_->row(pending_->key)[a];
    double step = cfg_.learning_rate;
    if (cfg_.sample_average) {
      auto& n = visits_[pending_->key];
      if (n.empty()) n.assign(static_cast<std::size_t>(L::kActions), 0);
      step = 1.0 / static_cast<double>(++n[a]);
    }
    v += step * (target - v);
    pending_.reset();
  }

  const QTable* read_ = nullptr;
  QTable* write_ = nullptr;
  DecisionGate gate_;
  QLearningConfig cfg_{};
  double epsilon_ = 0.0;
  std::optional<Pending> pending_;
  std::map<StateKey, std::vector<long>> visits_;
};

struct TrainLog {
  std::vector<double> block_mean_returns;  // one per 1000 episodes (last block may be partial)
};

// Tabular Q-learning over `cfg.training_episodes` episodes with episode seeds
// derived from cfg.seed.
template <LearningInterface L, class State, InformationExtractor X>
QTable train(const ProcessSpec<State>& env, const X& phi, DecisionGate gate, const QLearningConfig& cfg,
             TrainLog* log = nullptr) {
  cfg.validate();
  QTable table(L::kActions);
  QPolicy<L> policy(table, gate, cfg);
  double block_sum = 0.0;
  int block_n = 0;
  for (int ep = 0; ep < cfg.training_episodes; ++ep) {
    policy.set_epsilon(epsilon_at(ep, cfg));
    const auto trace = run_episode(env, policy, phi, episode_seed(cfg.seed, static_cast<std::uint64_t>(ep)),
                                   RunOptions{false});
    block_sum += trace.total_return;
    if (++block_n == 1000 || ep + 1 == cfg.training_episodes) {
      if (log) log->block_mean_returns.push_back(block_sum / block_n);
      block_sum = 0.0;
      block_n = 0;
    }
  }
  return table;
}

}  // namespace eplab::agents
