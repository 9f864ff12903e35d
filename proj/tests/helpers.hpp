#pragma once

// Test-only oracles, independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dbe/distributions.hpp"
#include "dbe/mrp.hpp"
#include "dbe/rng.hpp"

namespace dbe::testing {

/// KS distance of an atomic distribution against an analytic CDF, checked on
/// both sides of every jump. For a target law with atoms, pass its left-limit
/// CDF F(x-) as well (defaults to F, which is exact for continuous laws).
template <class Dist>
double ks_vs_cdf(const Dist& d, const std::function<double(double)>& F,
                 const std::function<double(double)>& F_left = nullptr) {
  const auto view = dbe::detail::atom_view(d);
  double cum = 0.0, best = 0.0;
  for (std::size_t k = 0; k < view.values.size();) {
    const double x = view.values[k];
    best = std::max(best, std::abs(cum - (F_left ? F_left(x) : F(x))));  // below the jump
    while (k < view.values.size() && view.values[k] == x) cum += view.probs[k++];
    best = std::max(best, std::abs(cum - F(x)));  // at the jump
  }
  return best;
}

/// W1 by direct numeric integration of |F1 - F2| on a fine mesh: an oracle
/// for the quantile-coupling implementation (continuous parts only resolve
/// to mesh accuracy).
template <class D1, class D2>
double w1_by_cdf_integration(const D1& a, const D2& b, double lo, double hi, int mesh = 200000) {
  double acc = 0.0;
  const double h = (hi - lo) / mesh;
  for (int k = 0; k < mesh; ++k) {
    const double x = lo + (k + 0.5) * h;
    acc += std::abs(cdf(a, x) - cdf(b, x)) * h;
  }
  return acc;
}

/// Reflexive-transitive closure by Floyd-Warshall; oracle for classify().
inline std::vector<std::vector<bool>> closure_oracle(const std::vector<std::vector<double>>& p) {
  const int d = static_cast<int>(p.size());
  std::vector<std::vector<bool>> r(d, std::vector<bool>(d, false));
  for (int i = 0; i < d; ++i) {
    r[i][i] = true;
    for (int j = 0; j < d; ++j)
      if (p[i][j] > 0.0) r[i][j] = true;
  }
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (r[i][k] && r[k][j]) r[i][j] = true;
  return r;
}

/// Essential states from the closure: i -> j implies j -> i.
inline std::vector<bool> essential_oracle(const std::vector<std::vector<bool>>& reach) {
  const int d = static_cast<int>(reach.size());
  std::vector<bool> ess(d, true);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (reach[i][j] && !reach[j][i]) ess[i] = false;
  return ess;
}

/// Visit weights by the truncated series sum_{t<=t_max} (1-g^a) g^(at) p^t.
inline std::vector<std::vector<double>> visit_weights_series_oracle(
    const std::vector<std::vector<double>>& p, double gamma, double alpha, int t_max = 200) {
  const int d = static_cast<int>(p.size());
  const double ga = std::pow(gamma, alpha);
  std::vector<std::vector<double>> power(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < d; ++i) power[i][i] = 1.0;
  std::vector<std::vector<double>> acc(d, std::vector<double>(d, 0.0));
  double coeff = 1.0 - ga;
  for (int t = 0; t <= t_max; ++t) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) acc[i][j] += coeff * power[i][j];
    coeff *= ga;
    std::vector<std::vector<double>> next(d, std::vector<double>(d, 0.0));
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        if (power[i][k] == 0.0) continue;
        for (int j = 0; j < d; ++j) next[i][j] += power[i][k] * p[k][j];
      }
    power = std::move(next);
  }
  return acc;
}

/// Random row-stochastic matrix with a sparsity knob.
inline std::vector<std::vector<double>> random_stochastic_matrix(int d, RngStream& rng,
                                                                 double keep_prob = 0.8) {
  std::vector<std::vector<double>> p(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < d; ++i) {
    double sum = 0.0;
    for (int j = 0; j < d; ++j) {
      if (rng.uniform01() < keep_prob) {
        p[i][j] = rng.uniform01();
        sum += p[i][j];
      }
    }
    if (sum == 0.0) {
      p[i][rng.uniform_index(d)] = 1.0;
      sum = 1.0;
    }
    for (int j = 0; j < d; ++j) p[i][j] /= sum;
  }
  return p;
}

/// Random reduced system with bounded discrete rewards in [-reward_scale, reward_scale].
inline MarkovRewardSystem random_bounded_system(int d, double gamma, RngStream& rng,
                                                double reward_scale = 1.0) {
  MarkovRewardSystem mrs;
  mrs.gamma = gamma;
  mrs.p = random_stochastic_matrix(d, rng);
  mrs.labels.resize(d);
  for (int i = 0; i < d; ++i) mrs.labels[i] = "s" + std::to_string(i);
  mrs.mu.assign(d, std::vector<RewardLaw>(d, point_mass(0.0)));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (mrs.p[i][j] <= 0.0) continue;
      const int n_atoms = 1 + static_cast<int>(rng.uniform_index(3));
      if (n_atoms == 1) {
        mrs.mu[i][j] = point_mass(reward_scale * (2.0 * rng.uniform01() - 1.0));
        continue;
      }
      std::vector<double> vals;
      for (int k = 0; k < n_atoms; ++k) vals.push_back(reward_scale * (2.0 * rng.uniform01() - 1.0));
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      std::vector<double> w(vals.size());
      double sum = 0.0;
      for (double& x : w) sum += (x = rng.uniform01() + 0.05);
      DiscreteAtoms atoms;
      for (std::size_t k = 0; k < vals.size(); ++k) atoms.atoms.push_back({vals[k], w[k] / sum});
      mrs.mu[i][j] = RewardLaw(std::move(atoms));
    }
  }
  return mrs;
}

/// Random bounded system with continuous (uniform) rewards, so the return
/// law is diffuse and KS comparisons against grid projections are meaningful.
inline MarkovRewardSystem random_diffuse_system(int d, double gamma, RngStream& rng) {
  MarkovRewardSystem mrs;
  mrs.gamma = gamma;
  mrs.p = random_stochastic_matrix(d, rng);
  mrs.labels.resize(d);
  for (int i = 0; i < d; ++i) mrs.labels[i] = "s" + std::to_string(i);
  mrs.mu.assign(d, std::vector<RewardLaw>(d, point_mass(0.0)));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (mrs.p[i][j] <= 0.0) continue;
      const double center = 2.0 * rng.uniform01() - 1.0;
      const double half_width = 0.25 + 0.5 * rng.uniform01();
      mrs.mu[i][j] = RewardLaw(Uniform{center - half_width, center + half_width});
    }
  return mrs;
}

/// The deterministic two-state cycle: 1 -> 2 with reward delta_1,
/// 2 -> 1 with reward delta_0. Fixed point (delta_{4/3}, delta_{2/3}) at
/// gamma = 1/2.
inline MarkovRewardSystem swap_chain(double gamma = 0.5, double r12 = 1.0, double r21 = 0.0) {
  MarkovRewardSystem mrs;
  mrs.gamma = gamma;
  mrs.labels = {"s1", "s2"};
  mrs.p = {{0.0, 1.0}, {1.0, 0.0}};
  mrs.mu = {{point_mass(0.0), point_mass(r12)}, {point_mass(r21), point_mass(0.0)}};
  return mrs;
}

/// d = 1 system with one reward law.
inline MarkovRewardSystem single_state(double gamma, RewardLaw law) {
  MarkovRewardSystem mrs;
  mrs.gamma = gamma;
  mrs.labels = {"s"};
  mrs.p = {{1.0}};
  mrs.mu = {{std::move(law)}};
  return mrs;
}

inline RewardLaw fair_bernoulli() {
  return RewardLaw(DiscreteAtoms{{{0.0, 0.5}, {1.0, 0.5}}});
}

inline double uniform02_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 * x;
}

}  // namespace dbe::testing
