#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbe/chain.hpp"
#include "dbe/mrp.hpp"
#include "dbe/reward_laws.hpp"

namespace dbe {

/// A state's reward tail is strictly heavier than x^(-alpha); the power-law
/// asymptotics at alpha are then undefined and the inputs are rejected.
struct IncompatibleTailIndexError : std::runtime_error {
  int state;
  explicit IncompatibleTailIndexError(int s)
      : std::runtime_error("state " + std::to_string(s) +
                           " has a reward tail heavier than the requested index"),
        state(s) {}
};

/// Every state has c_j = 0: the regular-variation limit is vacuous.
struct NoHeavyStateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Closed-form tail prediction per state:
///   P[G_i > x]  ~ right_const * x^(-alpha),
///   P[G_i < -x] ~ left_const  * x^(-alpha),
/// with right_const_i = sum_j w_ij q_j c_j / (1 - gamma^alpha) and its mirror
/// for the left tail.
struct TailReportEntry {
  double right_const = 0.0;
  double left_const = 0.0;
};

struct TailReport {
  double alpha = 1.0;
  std::vector<TailReportEntry> per_state;
  WeightMatrix weights;
  std::vector<RegVarDescriptor> input_descriptors;
};

/// Tail descriptors of every state's reward mixture at the common index.
/// Lighter-tailed laws get c = 0; heavier ones are rejected; all-zero c is
/// rejected as vacuous.
inline std::vector<RegVarDescriptor> validate_reg_var_inputs(const MarkovRewardSystem& mrs,
                                                             double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("validate_reg_var_inputs: alpha must be > 0");
  std::vector<RegVarDescriptor> out;
  out.reserve(mrs.d());
  bool any_heavy = false;
  for (int j = 0; j < mrs.d(); ++j) {
    const auto desc = reg_var(mrs.state_reward_law(j), alpha);
    if (!desc) throw IncompatibleTailIndexError(j);
    any_heavy = any_heavy || desc->c > 0.0;
    out.push_back(*desc);
  }
  if (!any_heavy) throw NoHeavyStateError("all states have c = 0 at the requested index");
  return out;
}

inline TailReport predict_tails(const MarkovRewardSystem& mrs, double alpha) {
  TailReport report;
  report.alpha = alpha;
  report.input_descriptors = validate_reg_var_inputs(mrs, alpha);
  report.weights = geometric_visit_weights(mrs.p, mrs.gamma, alpha);
  const double denom = 1.0 - std::pow(mrs.gamma, alpha);
  report.per_state.resize(mrs.d());
  for (int i = 0; i < mrs.d(); ++i) {
    double right = 0.0, left = 0.0;
    for (int j = 0; j < mrs.d(); ++j) {
      const RegVarDescriptor& dsc = report.input_descriptors[j];
      right += report.weights.w[i][j] * dsc.q * dsc.c;
      left += report.weights.w[i][j] * (1.0 - dsc.q) * dsc.c;
    }
    report.per_state[i] = {right / denom, left / denom};
  }
  return report;
}

/// Moment properties carried from rewards to the return, taken over all
/// states reachable from i: a uniform reward bound K gives |G_i| <= K/(1-gamma);
/// exponential-moment and p-th-moment suprema carry over as the minimum over
/// reachable reward laws. Each entry is absent when some reachable law lacks
/// the property entirely.
struct TransferEntry {
  std::optional<double> bound_k;
  std::optional<ExtendedSup> exp_beta_sup;
  std::optional<ExtendedSup> p_moment_sup;
};

inline TransferEntry transfer_bounds(const MarkovRewardSystem& mrs,
                                     const ChainClassification& chain, int i) {
  TransferEntry out;
  double k = 0.0;
  ExtendedSup beta{kInf, true}, p{kInf, true};
  bool bounded = true, has_beta = true, has_p = true;
  for (int j : reachable_from(chain, i)) {
    const RewardLaw law = mrs.state_reward_law(j);
    if (bounded) {
      const auto b = abs_bound(law);
      if (b)
        k = std::max(k, *b);
      else
        bounded = false;
    }
    const MomentProfile prof = moment_profile(law);
    beta = sup_min(beta, prof.exp_moment_beta_sup);
    p = sup_min(p, prof.p_moment_sup);
    has_beta = has_beta && prof.exp_moment_beta_sup.value > 0.0;
    has_p = has_p && prof.p_moment_sup.value > 0.0;
  }
  if (bounded) out.bound_k = k / (1.0 - mrs.gamma);
  if (has_beta) out.exp_beta_sup = beta;
  if (has_p) out.p_moment_sup = p;
  return out;
}

inline std::vector<TransferEntry> transfer_bounds(const MarkovRewardSystem& mrs) {
  const ChainClassification chain = classify(mrs.p);
  std::vector<TransferEntry> out;
  out.reserve(mrs.d());
  for (int i = 0; i < mrs.d(); ++i) out.push_back(transfer_bounds(mrs, chain, i));
  return out;
}

}  // namespace dbe
