#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dbe/distributions.hpp"
#include "dbe/monte_carlo.hpp"
#include "dbe/mrp.hpp"
#include "dbe/parallel.hpp"
#include "dbe/rng.hpp"

namespace dbe {

/// How the d random pairs (R_i, J_i) are placed on one probability space.
/// Marginal laws (and hence the fixed point they induce) do not depend on
/// the choice; `independence` is the default, `comonotone` shares one
/// uniform across rows per draw and exists as a contrast coupling. Further
/// couplings plug in here.
enum class Coupling { independence, comonotone };

/// One draw of the random pair (J, R): J has rows gamma * e_{J_i}, stored
/// compactly as the selected column per row.
struct AffinePairSample {
  double gamma = 0.5;
  std::vector<int> next;        // J_i per row
  std::vector<double> rewards;  // R_i per row

  std::vector<std::vector<double>> dense_j() const {
    const int d = static_cast<int>(next.size());
    std::vector<std::vector<double>> m(d, std::vector<double>(d, 0.0));
    for (int i = 0; i < d; ++i) m[i][next[i]] = gamma;
    return m;
  }
};

/// Per row i: J_i ~ p[i][.], then R_i ~ mu[i][J_i]. Under independence each
/// row draws fresh uniforms; under the comonotone coupling one transition
/// uniform and one reward uniform are shared by all rows.
inline AffinePairSample sample_pair(const MarkovRewardSystem& mrs, Coupling coupling,
                                    RngStream& rng) {
  const int d = mrs.d();
  AffinePairSample out;
  out.gamma = mrs.gamma;
  out.next.resize(d);
  out.rewards.resize(d);
  if (coupling == Coupling::independence) {
    for (int i = 0; i < d; ++i) {
      out.next[i] = detail::categorical(mrs.p[i], rng.uniform01());
      out.rewards[i] = sample(mrs.mu[i][out.next[i]], rng);
    }
  } else {
    const double uj = rng.uniform01();
    const double ur = rng.uniform01();
    for (int i = 0; i < d; ++i) {
      out.next[i] = detail::categorical(mrs.p[i], uj);
      out.rewards[i] = quantile(mrs.mu[i][out.next[i]], ur);
    }
  }
  return out;
}

namespace detail {

/// Compact form of prod_{s<t} J^(s): row i selects column sigma(i) with
/// scalar gamma^t, so the product composes in O(d) per step and is never
/// materialized densely.
struct CompactProduct {
  std::vector<int> column;  // sigma
  int steps = 0;

  explicit CompactProduct(int d) : column(d) {
    for (int i = 0; i < d; ++i) column[i] = i;
  }

  void absorb(const AffinePairSample& pair) {
    for (int& c : column) c = pair.next[c];
    ++steps;
  }

  /// Largest column multiplicity; the spectral norm of the product is
  /// gamma^steps * sqrt(max multiplicity).
  int max_multiplicity() const {
    std::vector<int> count(column.size(), 0);
    int best = 0;
    for (int c : column) best = std::max(best, ++count[c]);
    return best;
  }
};

}  // namespace detail

/// Partial sum of G = sum_t [prod_{s<t} J^(s)] R^(t) over t < T (the empty
/// product is the identity). For d = 1 this consumes the stream exactly like
/// sample_return, so the two agree draw for draw.
inline std::vector<double> simulate_series(const MarkovRewardSystem& mrs, Coupling coupling,
                                           int T, RngStream& rng) {
  if (T < 0) throw std::invalid_argument("simulate_series: T must be >= 0");
  const int d = mrs.d();
  std::vector<double> g(d, 0.0);
  detail::CompactProduct prod(d);
  double disc = 1.0;
  for (int t = 0; t < T; ++t) {
    const AffinePairSample pair = sample_pair(mrs, coupling, rng);
    for (int i = 0; i < d; ++i) g[i] += disc * pair.rewards[prod.column[i]];
    prod.absorb(pair);
    disc *= mrs.gamma;
  }
  return g;
}

/// (1/n) log ||prod_{s<n} J^(s)|| for one realization, using the spectral
/// norm gamma^n sqrt(max column multiplicity) of the compact product. The
/// estimate lies in [log gamma, log gamma + log(sqrt d)/n] deterministically
/// and converges to the top Lyapunov exponent log gamma.
inline double lyapunov_estimate(const MarkovRewardSystem& mrs, Coupling coupling, int n,
                                RngStream& rng) {
  if (n < 1) throw std::invalid_argument("lyapunov_estimate: n must be >= 1");
  const int d = mrs.d();
  detail::CompactProduct prod(d);
  for (int t = 0; t < n; ++t) prod.absorb(sample_pair(mrs, coupling, rng));
  const double norm_log = n * std::log(mrs.gamma) + 0.5 * std::log(prod.max_multiplicity());
  return norm_log / n;
}

/// Per-state KS distance between the marginals of n_samples series draws and
/// n_samples scalar returns sampled independently. Both approximate the same
/// fixed-point component, so the distances shrink at Monte Carlo rate.
inline std::vector<double> marginal_check(const MarkovRewardSystem& mrs, Coupling coupling,
                                          int n_samples, int T, std::uint64_t seed,
                                          int workers = 1) {
  if (n_samples < 1) throw std::invalid_argument("marginal_check: n_samples must be >= 1");
  const int d = mrs.d();
  std::vector<std::vector<double>> series(d, std::vector<double>(n_samples));
  parallel_for(n_samples, workers, [&](int k) {
    RngStream rng(seed, {stream_domain::affine, static_cast<std::uint64_t>(k)});
    const std::vector<double> g = simulate_series(mrs, coupling, T, rng);
    for (int i = 0; i < d; ++i) series[i][k] = g[i];
  });
  const EmpiricalReturnVector scalar = empirical_return_vector(mrs, T, n_samples, seed, workers);
  std::vector<double> out(d, 0.0);
  for (int i = 0; i < d; ++i)
    out[i] = ks_distance(EmpiricalDistribution(std::move(series[i])), scalar[i]);
  return out;
}

}  // namespace dbe
