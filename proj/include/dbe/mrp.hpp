#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dbe/reward_laws.hpp"

namespace dbe {

struct PolicyIncompleteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One outcome of playing action a in state s: with probability `prob` the
/// chain moves to `next` and pays a reward drawn from `reward`.
struct Branch {
  double prob = 1.0;
  std::string next;
  RewardLaw reward;
};

/// Finite MDP: per (state, action) a finite mixture over successor states
/// with a per-branch reward law.
struct MDPSpec {
  double gamma = 0.5;
  std::vector<std::string> states;
  std::vector<std::string> actions;
  std::map<std::pair<std::string, std::string>, std::vector<Branch>> branches;

  int state_index(const std::string& s) const {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i] == s) return static_cast<int>(i);
    return -1;
  }
  int action_index(const std::string& a) const {
    for (std::size_t i = 0; i < actions.size(); ++i)
      if (actions[i] == a) return static_cast<int>(i);
    return -1;
  }
};

/// Stationary policy: per state a distribution over actions.
struct PolicySpec {
  std::map<std::string, std::map<std::string, double>> probs;

  double prob(const std::string& s, const std::string& a) const {
    const auto it = probs.find(s);
    if (it == probs.end()) return 0.0;
    const auto jt = it->second.find(a);
    return jt == it->second.end() ? 0.0 : jt->second;
  }
};

/// The reduced model the distributional Bellman operator acts on: d states,
/// discount gamma, row-stochastic transition matrix p and a matrix mu of
/// conditional reward laws, with mu[i][j] the law of R_i given a move to j.
/// Entries with p[i][j] == 0 carry the point mass at zero by convention.
struct MarkovRewardSystem {
  double gamma = 0.5;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> p;
  std::vector<std::vector<RewardLaw>> mu;

  int d() const { return static_cast<int>(p.size()); }

  /// Unconditional law of R_i, i.e. the p[i][.]-mixture of mu[i][.].
  RewardLaw state_reward_law(int i) const {
    std::vector<double> w;
    std::vector<RewardLaw> laws;
    for (std::size_t j = 0; j < p[i].size(); ++j) {
      if (p[i][j] <= 0.0) continue;
      w.push_back(p[i][j]);
      laws.push_back(mu[i][j]);
    }
    return make_mixture(std::move(w), std::move(laws));
  }
};

/// A reported invariant violation; `code` values are stable identifiers.
struct Violation {
  std::string code;
  std::string detail;
};

namespace detail {

inline const std::vector<Branch>& branches_for(const MDPSpec& mdp, const std::string& s,
                                               const std::string& a) {
  const auto it = mdp.branches.find({s, a});
  if (it == mdp.branches.end())
    throw std::invalid_argument("MDP: missing transition for (" + s + ", " + a + ")");
  return it->second;
}

inline void check_policy_covers(const MDPSpec& mdp, const PolicySpec& policy) {
  for (const std::string& s : mdp.states) {
    const auto it = policy.probs.find(s);
    if (it == policy.probs.end() || it->second.empty())
      throw PolicyIncompleteError("policy has no action distribution for state " + s);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

/// State view: d = |S|, p[s][s'] marginalizes actions under the policy and
/// mu[s][s'] is the conditional reward mixture given the move s -> s'.
inline MarkovRewardSystem from_state_view(const MDPSpec& mdp, const PolicySpec& policy) {
  detail::check_policy_covers(mdp, policy);
  const int d = static_cast<int>(mdp.states.size());
  MarkovRewardSystem out;
  out.gamma = mdp.gamma;
  out.labels = mdp.states;
  out.p.assign(d, std::vector<double>(d, 0.0));
  out.mu.assign(d, std::vector<RewardLaw>(d, point_mass(0.0)));

  for (int i = 0; i < d; ++i) {
    const std::string& s = mdp.states[i];
    std::vector<std::vector<double>> w(d);
    std::vector<std::vector<RewardLaw>> laws(d);
    for (const std::string& a : mdp.actions) {
      const double pa = policy.prob(s, a);
      if (pa == 0.0) continue;
      for (const Branch& b : detail::branches_for(mdp, s, a)) {
        const int j = mdp.state_index(b.next);
        if (j < 0) throw std::invalid_argument("MDP: unknown next state " + b.next);
        const double mass = pa * b.prob;
        if (mass == 0.0) continue;
        out.p[i][j] += mass;
        w[j].push_back(mass);
        laws[j].push_back(b.reward);
      }
    }
    for (int j = 0; j < d; ++j) {
      if (out.p[i][j] <= 0.0) continue;
      for (double& x : w[j]) x /= out.p[i][j];
      out.mu[i][j] = make_mixture(std::move(w[j]), std::move(laws[j]));
    }
  }
  return out;
}

/// State-action view: d = |S x A| in lexicographic (state, action) order,
/// p[(s,a)][(s',a')] = rho-branch probability to s' times pi_{s'}(a').
inline MarkovRewardSystem from_state_action_view(const MDPSpec& mdp, const PolicySpec& policy) {
  detail::check_policy_covers(mdp, policy);
  const int ns = static_cast<int>(mdp.states.size());
  const int na = static_cast<int>(mdp.actions.size());
  const int d = ns * na;
  const auto idx = [na](int is, int ia) { return is * na + ia; };

  MarkovRewardSystem out;
  out.gamma = mdp.gamma;
  out.labels.reserve(d);
  for (int is = 0; is < ns; ++is)
    for (int ia = 0; ia < na; ++ia)
      out.labels.push_back(mdp.states[is] + "|" + mdp.actions[ia]);
  out.p.assign(d, std::vector<double>(d, 0.0));
  out.mu.assign(d, std::vector<RewardLaw>(d, point_mass(0.0)));

  for (int is = 0; is < ns; ++is) {
    for (int ia = 0; ia < na; ++ia) {
      const int i = idx(is, ia);
      // Aggregate branch mass and conditional reward mixture per successor state.
      std::vector<double> to_state(ns, 0.0);
      std::vector<std::vector<double>> w(ns);
      std::vector<std::vector<RewardLaw>> laws(ns);
      for (const Branch& b : detail::branches_for(mdp, mdp.states[is], mdp.actions[ia])) {
        const int js = mdp.state_index(b.next);
        if (js < 0) throw std::invalid_argument("MDP: unknown next state " + b.next);
        if (b.prob == 0.0) continue;
        to_state[js] += b.prob;
        w[js].push_back(b.prob);
        laws[js].push_back(b.reward);
      }
      for (int js = 0; js < ns; ++js) {
        if (to_state[js] <= 0.0) continue;
        for (double& x : w[js]) x /= to_state[js];
        const RewardLaw cond = make_mixture(std::move(w[js]), std::move(laws[js]));
        for (int ja = 0; ja < na; ++ja) {
          const double pa = policy.prob(mdp.states[js], mdp.actions[ja]);
          if (pa == 0.0) continue;
          out.p[i][idx(js, ja)] = to_state[js] * pa;
          out.mu[i][idx(js, ja)] = cond;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation (violations are data, not exceptions)
// ---------------------------------------------------------------------------

inline std::vector<Violation> validate(const MarkovRewardSystem& mrs) {
  std::vector<Violation> out;
  const int d = mrs.d();
  if (!(mrs.gamma > 0.0 && mrs.gamma < 1.0))
    out.push_back({"GammaOutOfRange", "gamma must lie in (0,1)"});
  if (static_cast<int>(mrs.labels.size()) != d)
    out.push_back({"LabelCountMismatch", "labels size != d"});
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(mrs.p[i].size()) != d || static_cast<int>(mrs.mu[i].size()) != d) {
      out.push_back({"ShapeMismatch", "row " + std::to_string(i) + " has wrong length"});
      continue;
    }
    double sum = 0.0;
    for (int j = 0; j < d; ++j) {
      const double pij = mrs.p[i][j];
      if (pij < 0.0 || pij > 1.0)
        out.push_back({"EntryOutOfRange",
                       "p[" + std::to_string(i) + "][" + std::to_string(j) + "] outside [0,1]"});
      sum += pij;
      if (pij == 0.0) {
        const bool is_delta0 =
            mrs.mu[i][j].is<PointMass>() && mrs.mu[i][j].as<PointMass>().value == 0.0;
        if (!is_delta0)
          out.push_back({"DeltaZeroConventionViolated",
                         "mu[" + std::to_string(i) + "][" + std::to_string(j) +
                             "] must be the point mass at 0 when p is 0"});
      }
    }
    if (std::abs(sum - 1.0) > 1e-12)
      out.push_back({"RowNotStochastic",
                     "row " + std::to_string(i) + " sums to " + std::to_string(sum)});
  }
  return out;
}

inline std::vector<Violation> validate(const MDPSpec& mdp) {
  std::vector<Violation> out;
  if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0))
    out.push_back({"GammaOutOfRange", "gamma must lie in (0,1)"});
  if (mdp.states.empty()) out.push_back({"NoStates", "state list is empty"});
  if (mdp.actions.empty()) out.push_back({"NoActions", "action list is empty"});
  for (const std::string& s : mdp.states) {
    for (const std::string& a : mdp.actions) {
      const auto it = mdp.branches.find({s, a});
      if (it == mdp.branches.end()) {
        out.push_back({"MissingTransition", "(" + s + ", " + a + ") has no branches"});
        continue;
      }
      double sum = 0.0;
      for (const Branch& b : it->second) {
        if (b.prob < 0.0 || b.prob > 1.0)
          out.push_back({"EntryOutOfRange", "branch prob outside [0,1] at (" + s + ", " + a + ")"});
        sum += b.prob;
        if (mdp.state_index(b.next) < 0)
          out.push_back({"UnknownNextState", "(" + s + ", " + a + ") -> " + b.next});
      }
      if (std::abs(sum - 1.0) > 1e-12)
        out.push_back({"BranchProbSum", "(" + s + ", " + a + ") branch probs sum to " +
                                            std::to_string(sum)});
    }
  }
  return out;
}

inline std::vector<Violation> validate(const MDPSpec& mdp, const PolicySpec& policy) {
  std::vector<Violation> out = validate(mdp);
  for (const std::string& s : mdp.states) {
    const auto it = policy.probs.find(s);
    if (it == policy.probs.end() || it->second.empty()) {
      out.push_back({"PolicyIncomplete", "no action distribution for state " + s});
      continue;
    }
    double sum = 0.0;
    for (const auto& [a, pr] : it->second) {
      if (mdp.action_index(a) < 0)
        out.push_back({"PolicyUnknownAction", "state " + s + " uses unknown action " + a});
      if (pr < 0.0 || pr > 1.0)
        out.push_back({"EntryOutOfRange", "policy prob outside [0,1] at state " + s});
      sum += pr;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      out.push_back({"PolicyWeightSum", "state " + s + " action probs sum to " +
                                            std::to_string(sum)});
  }
  return out;
}

}  // namespace dbe
