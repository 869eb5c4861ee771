#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "eplab/core/process.hpp"

// Line-delimited JSON trace format.
//
//   line 1      {"kind":"header","env":str,"seed":u64,"gamma_tick":num,
//                "actions":[str...],"events":[str...]}
//   per tick    {"kind":"tick","tick":int,"consulted":bool,"annotation":obj,
//                "observations":[{"id":str,"at":int,"payload":[num...]}...],
//                "interventions":[{"id":str,"arg":int}...],
//                "utilities":[{"tag":str,"value":num}...]}
//   last line   {"kind":"summary","length":int,"return":num,
//                "discounted_return":num,"by_tag":{tag:num...},
//                "counters":{str:num...},"final_annotation":obj,
//                "final_observations":[...]}
//
// Action and event ids are written by name; `tag` is one of task_reward,
// penalty, time_cost, interrupt_cost, switch_cost, other. Every utility value
// in a tick line is undiscounted.

namespace eplab {

namespace detail {

inline int index_of(const std::vector<std::string>& names, const std::string& s) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == s) return static_cast<int>(i);
  }
  try {
    return std::stoi(s);
  } catch (...) {
    throw std::runtime_error("trace: unknown name '" + s + "'");
  }
}

inline std::string name_at(const std::vector<std::string>& names, int id) {
  if (id >= 0 && static_cast<std::size_t>(id) < names.size()) return names[id];
  return std::to_string(id);
}

inline nlohmann::json observations_json(const ObservationSet& y, const std::vector<std::string>& names) {
  auto arr = nlohmann::json::array();
  for (const auto& e : y.events) {
    arr.push_back({{"id", name_at(names, e.id)}, {"at", e.emitted_at}, {"payload", e.payload}});
  }
  return arr;
}

inline ObservationSet observations_from(const nlohmann::json& arr, const std::vector<std::string>& names) {
  ObservationSet y;
  for (const auto& e : arr) {
    y.events.push_back({index_of(names, e.at("id").get<std::string>()), e.at("at").get<Tick>(),
                        e.at("payload").get<std::vector<double>>()});
  }
  return y;
}

}  // namespace detail

inline void write_trace(std::ostream& os, const EpisodeTrace& tr) {
  using nlohmann::json;
  json header = {{"kind", "header"},          {"env", tr.env},
                 {"seed", tr.seed},           {"gamma_tick", tr.gamma_tick},
                 {"actions", tr.action_names}, {"events", tr.event_names}};
  os << header.dump() << '\n';
  for (const auto& rec : tr.ticks) {
    json line;
    line["kind"] = "tick";
    line["tick"] = rec.tick;
    line["consulted"] = rec.consulted;
    line["annotation"] = rec.annotation;
    line["observations"] = detail::observations_json(rec.observations, tr.event_names);
    auto acts = json::array();
    for (const auto& a : rec.interventions) {
      acts.push_back({{"id", detail::name_at(tr.action_names, a.id)}, {"arg", a.arg}});
    }
    line["interventions"] = std::move(acts);
    auto us = json::array();
    for (const auto& u : rec.utilities) {
      us.push_back({{"tag", std::string(to_string(u.tag))}, {"value", u.value}});
    }
    line["utilities"] = std::move(us);
    os << line.dump() << '\n';
  }
  json by_tag = json::object();
  for (std::size_t i = 0; i < kUtilityTagCount; ++i) {
    by_tag[std::string(to_string(static_cast<UtilityTag>(i)))] = tr.tag_sums[i];
  }
  json summary = {{"kind", "summary"},
                  {"length", tr.length},
                  {"return", tr.total_return},
                  {"discounted_return", tr.discounted_return},
                  {"by_tag", by_tag},
                  {"counters", tr.counters},
                  {"final_annotation", tr.final_annotation},
                  {"final_observations",
                   detail::observations_json(tr.final_observations, tr.event_names)}};
  os << summary.dump() << '\n';
}

inline std::string trace_to_string(const EpisodeTrace& tr) {
  std::ostringstream os;
  write_trace(os, tr);
  return os.str();
}

inline EpisodeTrace read_trace(std::istream& is) {
  using nlohmann::json;
  EpisodeTrace tr;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  bool have_summary = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind == "header") {
      tr.env = j.at("env").get<std::string>();
      tr.seed = j.at("seed").get<std::uint64_t>();
      tr.gamma_tick = j.at("gamma_tick").get<double>();
      tr.action_names = j.at("actions").get<std::vector<std::string>>();
      tr.event_names = j.at("events").get<std::vector<std::string>>();
      have_header = true;
    } else if (kind == "tick") {
      if (!have_header) throw std::runtime_error("trace: tick line before header");
      TickRecord rec;
      rec.tick = j.at("tick").get<Tick>();
      rec.consulted = j.at("consulted").get<bool>();
      rec.annotation = j.at("annotation");
      rec.observations = detail::observations_from(j.at("observations"), tr.event_names);
      for (const auto& a : j.at("interventions")) {
        rec.interventions.insert(
            {detail::index_of(tr.action_names, a.at("id").get<std::string>()), a.at("arg").get<std::int64_t>()});
      }
      for (const auto& u : j.at("utilities")) {
        auto tag = utility_tag_from_string(u.at("tag").get<std::string>());
        if (!tag) throw std::runtime_error("trace line " + std::to_string(lineno) + ": bad tag");
        rec.utilities.push_back({u.at("value").get<double>(), rec.tick, *tag});
      }
      tr.ticks.push_back(std::move(rec));
    } else if (kind == "summary") {
      tr.length = j.at("length").get<Tick>();
      tr.total_return = j.at("return").get<double>();
      tr.discounted_return = j.at("discounted_return").get<double>();
      for (std::size_t i = 0; i < kUtilityTagCount; ++i) {
        tr.tag_sums[i] = j.at("by_tag").at(std::string(to_string(static_cast<UtilityTag>(i)))).get<double>();
      }
      tr.counters = j.at("counters").get<Counters>();
      tr.final_annotation = j.at("final_annotation");
      tr.final_observations = detail::observations_from(j.at("final_observations"), tr.event_names);
      have_summary = true;
    } else {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": unknown kind '" + kind + "'");
    }
  }
  if (!have_header || !have_summary) throw std::runtime_error("trace: missing header or summary");
  return tr;
}

}  // namespace eplab
