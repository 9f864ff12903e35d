#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dbe/chain.hpp"
#include "dbe/distributions.hpp"
#include "dbe/mrp.hpp"
#include "dbe/parallel.hpp"
#include "dbe/rng.hpp"

namespace dbe {

/// Raised when the fixed point does not exist (log+ moment fails on an
/// essential state). Distinct from running out of iteration budget.
struct NoFixedPointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OperatorOptions {
  int reward_atom_count = 64;    // quantile midpoints for continuous laws
  bool check_existence = true;   // set false for diagnostic runs
  int workers = 1;
};

struct SolveOptions : OperatorOptions {
  double tol = 1e-6;             // stop when successive sup-Wasserstein <= tol
  int max_iter = 1000;
  double wasserstein_order = 1.0;
};

/// Iteration diagnostics. gap_history holds the sup-Wasserstein distance
/// between successive iterates; clamped_mass is the largest per-state mass
/// that hit the grid boundary in the final application (nonzero means the
/// grid truncates the law, e.g. for heavy tails).
struct ConvergenceReport {
  int iterations = 0;
  std::vector<double> gap_history;
  bool converged = false;
  double final_residual = 0.0;
  double clamped_mass = 0.0;
};

namespace detail {

using RewardAtomTable = std::vector<std::vector<std::vector<Atom>>>;

inline RewardAtomTable reward_atom_table(const MarkovRewardSystem& mrs, int m) {
  const int d = mrs.d();
  RewardAtomTable t(d, std::vector<std::vector<Atom>>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (mrs.p[i][j] > 0.0) t[i][j] = reward_atoms(mrs.mu[i][j], m);
  return t;
}

/// One application with a precomputed reward-atom table; writes per-state
/// clamped mass into `clamped`.
inline ReturnVector apply_with_table(const MarkovRewardSystem& mrs, const ReturnVector& eta,
                                     const RewardAtomTable& table, int workers,
                                     std::vector<double>& clamped) {
  const int d = mrs.d();
  const Grid& g = eta.front().grid;
  ReturnVector out(d, GridDistribution{g, {}});
  clamped.assign(d, 0.0);
  parallel_for(d, workers, [&](int i) {
    std::vector<double>& probs = out[i].probs;
    probs.assign(g.n, 0.0);
    double clamp_i = 0.0;
    for (int j = 0; j < d; ++j) {
      const double pij = mrs.p[i][j];
      if (pij <= 0.0) continue;
      for (const Atom& ra : table[i][j]) {
        // Push eta_j through x -> ra.value + gamma*x and project in one pass.
        const std::vector<Atom> pushed = push_affine(eta[j], ra.value, mrs.gamma);
        clamp_i += detail::project_accumulate(pushed, pij * ra.prob, g, probs);
      }
    }
    clamped[i] = clamp_i;
  });
  return out;
}

}  // namespace detail

/// One application of the distributional Bellman operator on a shared grid:
/// for each state i, the reward law toward each successor j is discretized
/// into atoms, eta_j is pushed through x -> r + gamma*x per atom, and the
/// resulting mixture is projected back onto the grid.
inline ReturnVector apply_operator(const MarkovRewardSystem& mrs, const ReturnVector& eta,
                                   const OperatorOptions& opts = {},
                                   double* clamped_mass = nullptr) {
  if (static_cast<int>(eta.size()) != mrs.d())
    throw std::invalid_argument("apply_operator: eta size != d");
  check_shared_grid(eta);
  if (opts.check_existence) {
    const ExistenceReport ex = existence_check(mrs);
    if (!ex.exists)
      throw NoFixedPointError(
          "no fixed point: infinite log+ moment on an essential state (pass "
          "check_existence=false for diagnostic runs)");
  }
  const auto table = detail::reward_atom_table(mrs, opts.reward_atom_count);
  std::vector<double> clamped;
  ReturnVector out = detail::apply_with_table(mrs, eta, table, opts.workers, clamped);
  if (clamped_mass) *clamped_mass = *std::max_element(clamped.begin(), clamped.end());
  return out;
}

/// CDF-form residual per state: sup over grid points of
/// |F_i(x) - sum_j p_ij int F_j((x - r)/gamma) dmu_ij(r)|, the reward
/// integral evaluated with the same atom discretization as the operator.
inline std::vector<double> cdf_residual(const MarkovRewardSystem& mrs, const ReturnVector& eta,
                                        int reward_atom_count = 64) {
  if (static_cast<int>(eta.size()) != mrs.d())
    throw std::invalid_argument("cdf_residual: eta size != d");
  check_shared_grid(eta);
  const int d = mrs.d();
  const Grid& g = eta.front().grid;
  const auto table = detail::reward_atom_table(mrs, reward_atom_count);

  std::vector<std::vector<double>> cum(d, std::vector<double>(g.n, 0.0));
  for (int j = 0; j < d; ++j) {
    double c = 0.0;
    for (int k = 0; k < g.n; ++k) {
      c += eta[j].probs[k];
      cum[j][k] = c;
    }
  }
  // Atom-boundary slop: (x - r)/gamma computed in floating point can land a
  // hair below a grid atom that it hits exactly in real arithmetic.
  const double slop = detail::boundary_tol(g);
  const auto cdf_at = [&](int j, double x_raw) -> double {
    const double x = x_raw + slop;
    if (x < g.x_min) return 0.0;
    if (x >= g.x_max) return cum[j].back();
    const int k = static_cast<int>((x - g.x_min) / g.spacing());
    // point(k) <= x < point(k+1) up to rounding; walk back if overshoot
    int kk = std::min(k, g.n - 1);
    while (kk > 0 && g.point(kk) > x) --kk;
    while (kk + 1 < g.n && g.point(kk + 1) <= x) ++kk;
    return cum[j][kk];
  };

  std::vector<double> res(d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < g.n; ++k) {
      const double x = g.point(k);
      double rhs = 0.0;
      for (int j = 0; j < d; ++j) {
        const double pij = mrs.p[i][j];
        if (pij <= 0.0) continue;
        for (const Atom& ra : table[i][j])
          rhs += pij * ra.prob * cdf_at(j, (x - ra.value) / mrs.gamma);
      }
      res[i] = std::max(res[i], std::abs(cum[i][k] - rhs));
    }
  }
  return res;
}

/// Apply the operator n_steps times, recording successive sup-Wasserstein
/// gaps. The convergence flag is only meaningful for solve_fixed_point.
inline std::pair<ReturnVector, ConvergenceReport> iterate(const MarkovRewardSystem& mrs,
                                                          ReturnVector init, int n_steps,
                                                          const OperatorOptions& opts = {}) {
  if (n_steps < 0) throw std::invalid_argument("iterate: n_steps must be >= 0");
  if (static_cast<int>(init.size()) != mrs.d())
    throw std::invalid_argument("iterate: init size != d");
  check_shared_grid(init);
  if (opts.check_existence) {
    const ExistenceReport ex = existence_check(mrs);
    if (!ex.exists) throw NoFixedPointError("no fixed point: existence check failed");
  }
  const auto table = detail::reward_atom_table(mrs, opts.reward_atom_count);
  ConvergenceReport report;
  std::vector<double> clamped(mrs.d(), 0.0);
  ReturnVector cur = std::move(init);
  for (int s = 0; s < n_steps; ++s) {
    ReturnVector next = detail::apply_with_table(mrs, cur, table, opts.workers, clamped);
    report.gap_history.push_back(sup_wasserstein(1.0, cur, next));
    cur = std::move(next);
    ++report.iterations;
  }
  report.clamped_mass = clamped.empty() ? 0.0 : *std::max_element(clamped.begin(), clamped.end());
  const auto res = cdf_residual(mrs, cur, opts.reward_atom_count);
  report.final_residual = *std::max_element(res.begin(), res.end());
  return {std::move(cur), report};
}

/// The all-delta_0 start vector on a grid.
inline ReturnVector delta_start(const Grid& g, int d, double value = 0.0) {
  return ReturnVector(d, grid_delta(g, value));
}

/// Iterate from the all-delta_0 vector until the sup-Wasserstein gap between
/// successive iterates drops to tol, or the budget runs out (converged=false;
/// distinguished from nonexistence, which throws NoFixedPointError).
inline std::pair<ReturnVector, ConvergenceReport> solve_fixed_point(const MarkovRewardSystem& mrs,
                                                                    const Grid& grid,
                                                                    const SolveOptions& opts = {}) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_fixed_point: tol must be > 0");
  if (opts.check_existence) {
    const ExistenceReport ex = existence_check(mrs);
    if (!ex.exists) throw NoFixedPointError("no fixed point: existence check failed");
  }
  const auto table = detail::reward_atom_table(mrs, opts.reward_atom_count);
  ConvergenceReport report;
  std::vector<double> clamped(mrs.d(), 0.0);
  ReturnVector cur = delta_start(grid, mrs.d());
  for (int s = 0; s < opts.max_iter; ++s) {
    ReturnVector next = detail::apply_with_table(mrs, cur, table, opts.workers, clamped);
    const double gap = sup_wasserstein(opts.wasserstein_order, cur, next);
    report.gap_history.push_back(gap);
    cur = std::move(next);
    ++report.iterations;
    if (gap <= opts.tol) {
      report.converged = true;
      break;
    }
  }
  report.clamped_mass = *std::max_element(clamped.begin(), clamped.end());
  const auto res = cdf_residual(mrs, cur, opts.reward_atom_count);
  report.final_residual = *std::max_element(res.begin(), res.end());
  return {std::move(cur), report};
}

}  // namespace dbe
