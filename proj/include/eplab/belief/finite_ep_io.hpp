#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/belief/finite_ep.hpp"

// Row-per-entry table format for small explicit EPs.
//
//   # comment                      blank lines and '#' comments are ignored
//   gamma <real>
//   state <name>
//   set <name> [atom ...]          no atoms declares the empty set
//   obs <name> [event ...]         no events declares the empty observation set
//   F <state> <set> <next-state> <prob>
//   O <state> <obs> <prob>
//   U <state> <set> <value>
//   A <state> <set> <0|1>          admissibility, default 1
//
// Declarations must precede the entries that use them. Unlisted F and O
// entries are zero; unlisted U entries are zero.

namespace eplab::belief {

class TableParseError : public std::runtime_error {
 public:
  TableParseError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline FiniteEP parse_finite_ep(std::istream& in) {
  FiniteEP ep;
  std::map<std::string, int> atoms, events;
  std::map<std::string, std::size_t> state_ix, set_ix, obs_ix;
  struct Entry {
    std::size_t line;
    char kind;
    std::vector<std::string> f;
  };
  std::vector<Entry> entries;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& kw = tok[0];
    if (kw == "gamma") {
      if (tok.size() != 2) throw TableParseError(lineno, "gamma takes one value");
      try {
        ep.gamma = std::stod(tok[1]);
      } catch (...) {
        throw TableParseError(lineno, "bad gamma '" + tok[1] + "'");
      }
    } else if (kw == "state") {
      if (tok.size() != 2) throw TableParseError(lineno, "state takes one name");
      if (state_ix.count(tok[1])) throw TableParseError(lineno, "duplicate state " + tok[1]);
      state_ix[tok[1]] = ep.states.size();
      ep.states.push_back(tok[1]);
    } else if (kw == "set") {
      if (tok.size() < 2) throw TableParseError(lineno, "set needs a name");
      if (set_ix.count(tok[1])) throw TableParseError(lineno, "duplicate set " + tok[1]);
      InterventionSet s;
      for (std::size_t i = 2; i < tok.size(); ++i) {
        auto [it, fresh] = atoms.try_emplace(tok[i], static_cast<int>(atoms.size()));
        try {
          s.insert({it->second, 0});
        } catch (const std::invalid_argument&) {
          throw TableParseError(lineno, "duplicate atom " + tok[i] + " in set " + tok[1]);
        }
      }
      set_ix[tok[1]] = ep.intervention_sets.size();
      ep.set_names.push_back(tok[1]);
      ep.intervention_sets.push_back(std::move(s));
    } else if (kw == "obs") {
      if (tok.size() < 2) throw TableParseError(lineno, "obs needs a name");
      if (obs_ix.count(tok[1])) throw TableParseError(lineno, "duplicate obs " + tok[1]);
      std::vector<int> ids;
      for (std::size_t i = 2; i < tok.size(); ++i) {
        auto [it, fresh] = events.try_emplace(tok[i], static_cast<int>(events.size()));
        ids.push_back(it->second);
      }
      obs_ix[tok[1]] = ep.obs_sets.size();
      ep.obs_names.push_back(tok[1]);
      ep.obs_sets.push_back(std::move(ids));
    } else if (kw == "F" || kw == "O" || kw == "U" || kw == "A") {
      entries.push_back({lineno, kw[0], std::move(tok)});
    } else {
      throw TableParseError(lineno, "unknown keyword '" + kw + "'");
    }
  }

  ep.resize(ep.states.size(), ep.intervention_sets.size(), ep.obs_sets.size());
  auto lookup = [](const std::map<std::string, std::size_t>& m, const std::string& key, std::size_t line,
                   const char* what) {
    auto it = m.find(key);
    if (it == m.end()) throw TableParseError(line, std::string("unknown ") + what + " '" + key + "'");
    return it->second;
  };
  auto number = [](const std::string& s, std::size_t line) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (...) {
      throw TableParseError(line, "bad number '" + s + "'");
    }
  };
  for (const auto& e : entries) {
    const auto& f = e.f;
    switch (e.kind) {
      case 'F':
        if (f.size() != 5) throw TableParseError(e.line, "F <state> <set> <next> <prob>");
        ep.transition[lookup(state_ix, f[1], e.line, "state")][lookup(set_ix, f[2], e.line, "set")]
                     [lookup(state_ix, f[3], e.line, "state")] = number(f[4], e.line);
        break;
      case 'O':
        if (f.size() != 4) throw TableParseError(e.line, "O <state> <obs> <prob>");
        ep.observation[lookup(state_ix, f[1], e.line, "state")][lookup(obs_ix, f[2], e.line, "obs")] =
            number(f[3], e.line);
        break;
      case 'U':
        if (f.size() != 4) throw TableParseError(e.line, "U <state> <set> <value>");
        ep.utility[lookup(state_ix, f[1], e.line, "state")][lookup(set_ix, f[2], e.line, "set")] =
            number(f[3], e.line);
        break;
      case 'A':
        if (f.size() != 4 || (f[3] != "0" && f[3] != "1")) throw TableParseError(e.line, "A <state> <set> <0|1>");
        ep.admissible[lookup(state_ix, f[1], e.line, "state")][lookup(set_ix, f[2], e.line, "set")] = f[3] == "1";
        break;
    }
  }
  ep.validate();
  return ep;
}

inline FiniteEP load_finite_ep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_finite_ep(in);
}

}  // namespace eplab::belief
