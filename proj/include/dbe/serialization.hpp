#pragma once

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dbe/distributions.hpp"
#include "dbe/mrp.hpp"
#include "dbe/reward_laws.hpp"

namespace dbe {

using json = nlohmann::json;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Reward laws <-> JSON  (field names are the wire format; see docs/formats.md)
// ---------------------------------------------------------------------------

inline json to_json(const RewardLaw& law) {
  struct V {
    json operator()(const PointMass& l) const {
      return {{"kind", "pointmass"}, {"value", l.value}};
    }
    json operator()(const DiscreteAtoms& l) const {
      json atoms = json::array();
      for (const Atom& a : l.atoms) atoms.push_back({{"value", a.value}, {"prob", a.prob}});
      return {{"kind", "discrete"}, {"atoms", atoms}};
    }
    json operator()(const Uniform& l) const {
      return {{"kind", "uniform"}, {"lo", l.lo}, {"hi", l.hi}};
    }
    json operator()(const Normal& l) const {
      return {{"kind", "normal"}, {"mean", l.mean}, {"stddev", l.stddev}};
    }
    json operator()(const Exponential& l) const {
      return {{"kind", "exponential"}, {"rate", l.rate}, {"sign", l.sign}};
    }
    json operator()(const TwoSidedPareto& l) const {
      return {{"kind", "pareto"},
              {"alpha", l.alpha},
              {"scale", l.scale},
              {"right_weight", l.right_weight}};
    }
    json operator()(const Cauchy& l) const {
      return {{"kind", "cauchy"}, {"location", l.location}, {"scale", l.scale}};
    }
    json operator()(const SuperHeavy& l) const {
      return {{"kind", "superheavy"}, {"threshold", l.threshold}};
    }
    json operator()(const Mixture& l) const {
      json comps = json::array();
      for (std::size_t k = 0; k < l.components.size(); ++k)
        comps.push_back({{"weight", l.weights[k]}, {"law", to_json(l.components[k])}});
      return {{"kind", "mixture"}, {"components", comps}};
    }
  };
  return law.visit(V{});
}

inline RewardLaw reward_law_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ParseError("reward law: expected an object with a \"kind\" field");
  const std::string kind = j.at("kind").get<std::string>();
  try {
    if (kind == "pointmass") return RewardLaw(PointMass{j.at("value").get<double>()});
    if (kind == "discrete") {
      DiscreteAtoms l;
      for (const json& a : j.at("atoms"))
        l.atoms.push_back({a.at("value").get<double>(), a.at("prob").get<double>()});
      return RewardLaw(std::move(l));
    }
    if (kind == "uniform")
      return RewardLaw(Uniform{j.at("lo").get<double>(), j.at("hi").get<double>()});
    if (kind == "normal")
      return RewardLaw(Normal{j.at("mean").get<double>(), j.at("stddev").get<double>()});
    if (kind == "exponential")
      return RewardLaw(Exponential{j.at("rate").get<double>(), j.value("sign", 1)});
    if (kind == "pareto")
      return RewardLaw(TwoSidedPareto{j.at("alpha").get<double>(), j.at("scale").get<double>(),
                                      j.value("right_weight", 0.5)});
    if (kind == "cauchy")
      return RewardLaw(Cauchy{j.at("location").get<double>(), j.at("scale").get<double>()});
    if (kind == "superheavy") return RewardLaw(SuperHeavy{j.at("threshold").get<double>()});
    if (kind == "mixture") {
      Mixture l;
      for (const json& c : j.at("components")) {
        l.weights.push_back(c.at("weight").get<double>());
        l.components.push_back(reward_law_from_json(c.at("law")));
      }
      return RewardLaw(std::move(l));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("reward law \"") + kind + "\": " + e.what());
  }
  throw ParseError("reward law: unknown kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// MDP / policy files
// ---------------------------------------------------------------------------

inline json to_json(const MDPSpec& mdp) {
  json transitions = json::object();
  for (const auto& [key, branches] : mdp.branches) {
    json list = json::array();
    for (const Branch& b : branches)
      list.push_back({{"prob", b.prob}, {"next", b.next}, {"reward", to_json(b.reward)}});
    transitions[key.first + "|" + key.second] = list;
  }
  return {{"gamma", mdp.gamma},
          {"states", mdp.states},
          {"actions", mdp.actions},
          {"transitions", transitions}};
}

inline MDPSpec mdp_from_json(const json& j) {
  MDPSpec mdp;
  try {
    mdp.gamma = j.at("gamma").get<double>();
    mdp.states = j.at("states").get<std::vector<std::string>>();
    mdp.actions = j.at("actions").get<std::vector<std::string>>();
    for (const std::string& s : mdp.states)
      if (s.find('|') != std::string::npos)
        throw ParseError("state label must not contain '|': " + s);
    for (const std::string& a : mdp.actions)
      if (a.find('|') != std::string::npos)
        throw ParseError("action label must not contain '|': " + a);
    for (const auto& [key, list] : j.at("transitions").items()) {
      const std::size_t bar = key.find('|');
      if (bar == std::string::npos)
        throw ParseError("transition key must be \"state|action\": " + key);
      std::vector<Branch> branches;
      for (const json& b : list)
        branches.push_back({b.at("prob").get<double>(), b.at("next").get<std::string>(),
                            reward_law_from_json(b.at("reward"))});
      mdp.branches[{key.substr(0, bar), key.substr(bar + 1)}] = std::move(branches);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("mdp: ") + e.what());
  }
  return mdp;
}

inline json to_json(const PolicySpec& policy) {
  json out = json::object();
  for (const auto& [s, acts] : policy.probs) {
    json row = json::object();
    for (const auto& [a, p] : acts) row[a] = p;
    out[s] = row;
  }
  return out;
}

inline PolicySpec policy_from_json(const json& j) {
  PolicySpec out;
  try {
    for (const auto& [s, row] : j.items())
      for (const auto& [a, p] : row.items()) out.probs[s][a] = p.get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("policy: ") + e.what());
  }
  return out;
}

template <class T>
T load_json_file(const std::string& path, T (*parse)(const json&)) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse(j);
}

inline MDPSpec load_mdp(const std::string& path) {
  return load_json_file<MDPSpec>(path, &mdp_from_json);
}

inline PolicySpec load_policy(const std::string& path) {
  return load_json_file<PolicySpec>(path, &policy_from_json);
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

inline void write_csv(std::ostream& os, const GridDistribution& d) {
  os << "support,prob\n";
  std::ostringstream buf;
  buf.precision(17);
  for (int k = 0; k < d.grid.n; ++k) buf << d.grid.point(k) << ',' << d.probs[k] << '\n';
  os << buf.str();
}

inline void write_csv(std::ostream& os, const EmpiricalDistribution& d) {
  os << "sample\n";
  std::ostringstream buf;
  buf.precision(17);
  for (double x : d.samples) buf << x << '\n';
  os << buf.str();
}

}  // namespace dbe
