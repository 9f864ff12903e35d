#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dbe/mrp.hpp"

namespace dbe {

/// Raised when an expected-reward reduction hits a law without a mean
/// (e.g. Cauchy). Ordinary values then do not exist, though distributional
/// fixed points still may.
struct UndefinedMeanError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Expected rewards and successor-state distributions, indexed [state][action].
struct ReducedMDP {
  std::vector<std::vector<double>> reward;             // r_(s,a)
  std::vector<std::vector<std::vector<double>>> next;  // p_(s,a) over states
};

struct ValueFunction {
  std::vector<double> v;  // by state index
};

struct QFunction {
  std::vector<std::vector<double>> q;  // [state][action]
};

inline ReducedMDP reduce(const MDPSpec& mdp) {
  const int ns = static_cast<int>(mdp.states.size());
  const int na = static_cast<int>(mdp.actions.size());
  ReducedMDP out;
  out.reward.assign(ns, std::vector<double>(na, 0.0));
  out.next.assign(ns, std::vector<std::vector<double>>(na, std::vector<double>(ns, 0.0)));
  for (int is = 0; is < ns; ++is) {
    for (int ia = 0; ia < na; ++ia) {
      const auto it = mdp.branches.find({mdp.states[is], mdp.actions[ia]});
      if (it == mdp.branches.end())
        throw std::invalid_argument("reduce: missing transition for (" + mdp.states[is] + ", " +
                                    mdp.actions[ia] + ")");
      double r = 0.0;
      for (const Branch& b : it->second) {
        const auto m = mean(b.reward);
        if (!m)
          throw UndefinedMeanError("reward law of (" + mdp.states[is] + ", " + mdp.actions[ia] +
                                   ") has no mean");
        r += b.prob * *m;
        const int js = mdp.state_index(b.next);
        if (js < 0) throw std::invalid_argument("reduce: unknown next state " + b.next);
        out.next[is][ia][js] += b.prob;
      }
      out.reward[is][ia] = r;
    }
  }
  return out;
}

namespace detail {

struct PolicyMatrices {
  Eigen::MatrixXd transitions;  // policy-averaged P_pi
  Eigen::VectorXd rewards;      // policy-averaged r_pi
};

inline PolicyMatrices policy_average(const MDPSpec& mdp, const PolicySpec& policy,
                                     const ReducedMDP& red) {
  const int ns = static_cast<int>(mdp.states.size());
  const int na = static_cast<int>(mdp.actions.size());
  PolicyMatrices out{Eigen::MatrixXd::Zero(ns, ns), Eigen::VectorXd::Zero(ns)};
  for (int is = 0; is < ns; ++is) {
    for (int ia = 0; ia < na; ++ia) {
      const double pa = policy.prob(mdp.states[is], mdp.actions[ia]);
      if (pa == 0.0) continue;
      out.rewards(is) += pa * red.reward[is][ia];
      for (int js = 0; js < ns; ++js) out.transitions(is, js) += pa * red.next[is][ia][js];
    }
  }
  return out;
}

}  // namespace detail

/// Solve v = r_pi + gamma P_pi v directly; unique since gamma < 1.
inline ValueFunction solve_v(const MDPSpec& mdp, const PolicySpec& policy) {
  const ReducedMDP red = reduce(mdp);
  const auto [P, r] = detail::policy_average(mdp, policy, red);
  const int ns = static_cast<int>(mdp.states.size());
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(ns, ns) - mdp.gamma * P;
  const Eigen::VectorXd v = m.partialPivLu().solve(r);
  ValueFunction out;
  out.v.assign(v.data(), v.data() + ns);
  return out;
}

/// q from v by one-step lookahead.
inline QFunction solve_q(const MDPSpec& mdp, const PolicySpec& policy) {
  const ReducedMDP red = reduce(mdp);
  const ValueFunction vf = solve_v(mdp, policy);
  const int ns = static_cast<int>(mdp.states.size());
  const int na = static_cast<int>(mdp.actions.size());
  QFunction out;
  out.q.assign(ns, std::vector<double>(na, 0.0));
  for (int is = 0; is < ns; ++is)
    for (int ia = 0; ia < na; ++ia) {
      double q = red.reward[is][ia];
      for (int js = 0; js < ns; ++js) q += mdp.gamma * red.next[is][ia][js] * vf.v[js];
      out.q[is][ia] = q;
    }
  return out;
}

/// Greedy deterministic policy; ties break to the first declared action.
inline PolicySpec improve(const MDPSpec& mdp, const QFunction& q) {
  PolicySpec out;
  for (std::size_t is = 0; is < mdp.states.size(); ++is) {
    int best = 0;
    for (std::size_t ia = 1; ia < mdp.actions.size(); ++ia)
      if (q.q[is][ia] > q.q[is][best]) best = static_cast<int>(ia);
    out.probs[mdp.states[is]] = {{mdp.actions[best], 1.0}};
  }
  return out;
}

struct PolicyIterationResult {
  PolicySpec policy;
  ValueFunction values;
  int iterations = 0;
  std::vector<std::vector<double>> value_trace;  // per-round values
};

/// Alternate evaluation and greedy improvement until the policy is stable.
/// Terminates because deterministic policies are finite and improvement is
/// monotone.
inline PolicyIterationResult policy_iteration(const MDPSpec& mdp, const PolicySpec& init) {
  PolicyIterationResult out;
  out.policy = init;
  constexpr int kMaxRounds = 100000;
  for (int round = 0; round < kMaxRounds; ++round) {
    const QFunction q = solve_q(mdp, out.policy);
    out.values = solve_v(mdp, out.policy);
    out.value_trace.push_back(out.values.v);
    const PolicySpec next = improve(mdp, q);
    ++out.iterations;
    if (next.probs == out.policy.probs) return out;
    out.policy = next;
  }
  throw std::runtime_error("policy_iteration: did not stabilize");
}

/// State values directly from a reduced system: v = (Id - gamma p)^(-1) r
/// with r_i the mean of the state's reward mixture.
inline std::vector<double> state_values(const MarkovRewardSystem& mrs) {
  const int d = mrs.d();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd r(d);
  for (int i = 0; i < d; ++i) {
    const auto mu = mean(mrs.state_reward_law(i));
    if (!mu) throw UndefinedMeanError("state " + std::to_string(i) + " reward has no mean");
    r(i) = *mu;
    for (int j = 0; j < d; ++j) m(i, j) -= mrs.gamma * mrs.p[i][j];
  }
  const Eigen::VectorXd v = m.partialPivLu().solve(r);
  return std::vector<double>(v.data(), v.data() + d);
}

}  // namespace dbe
