#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dbe/bellman.hpp"
#include "dbe/distributions.hpp"
#include "dbe/mrp.hpp"
#include "dbe/parallel.hpp"
#include "dbe/rng.hpp"

namespace dbe {

struct InsufficientTailSamplesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One rollout of the Markov reward process (indices into states/actions).
struct Trajectory {
  std::vector<int> states;   // length T+1
  std::vector<int> actions;  // length T
  std::vector<double> rewards;
};

namespace detail {

/// Draw from a categorical row with one uniform.
inline int categorical(std::span<const double> row, double u) {
  double c = 0.0;
  int last = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    c += row[j];
    last = static_cast<int>(j);
    if (u <= c) return last;
  }
  return last;
}

}  // namespace detail

inline Trajectory sample_trajectory(const MDPSpec& mdp, const PolicySpec& policy,
                                    const std::string& s0, int T, RngStream& rng) {
  if (T < 0) throw std::invalid_argument("sample_trajectory: T must be >= 0");
  const int start = mdp.state_index(s0);
  if (start < 0) throw std::invalid_argument("sample_trajectory: unknown start state " + s0);

  Trajectory out;
  out.states.push_back(start);
  int cur = start;
  for (int t = 0; t < T; ++t) {
    const std::string& s = mdp.states[cur];
    // action ~ pi_s
    const double ua = rng.uniform01();
    double c = 0.0;
    int act = -1;
    const auto it = policy.probs.find(s);
    if (it == policy.probs.end() || it->second.empty())
      throw PolicyIncompleteError("policy has no action distribution for state " + s);
    for (const auto& [a, pr] : it->second) {
      c += pr;
      act = mdp.action_index(a);
      if (ua <= c) break;
    }
    // (next state, reward) ~ rho_(s,a)
    const auto& branches = mdp.branches.at({s, mdp.actions[act]});
    const double ub = rng.uniform01();
    c = 0.0;
    const Branch* chosen = &branches.back();
    for (const Branch& b : branches) {
      c += b.prob;
      if (ub <= c) {
        chosen = &b;
        break;
      }
    }
    out.actions.push_back(act);
    out.rewards.push_back(sample(chosen->reward, rng));
    cur = mdp.state_index(chosen->next);
    out.states.push_back(cur);
  }
  return out;
}

/// One truncated return sum_{t<T} gamma^t R_t along the index chain started
/// at i. Per step: one uniform for the transition, then the reward draw.
inline double sample_return(const MarkovRewardSystem& mrs, int i, int T, RngStream& rng) {
  if (T < 0) throw std::invalid_argument("sample_return: T must be >= 0");
  double g = 0.0, disc = 1.0;
  int cur = i;
  for (int t = 0; t < T; ++t) {
    const int next = detail::categorical(mrs.p[cur], rng.uniform01());
    g += disc * sample(mrs.mu[cur][next], rng);
    disc *= mrs.gamma;
    cur = next;
  }
  return g;
}

/// Truncation horizon: for bounded rewards the smallest T with remainder
/// gamma^T K/(1-gamma) <= 1e-9; for unbounded rewards a fixed T = 60 (tail
/// constants are dominated by large early rewards, so the truncation bias on
/// them is second order).
inline int default_horizon(const MarkovRewardSystem& mrs) {
  double k = 0.0;
  for (int i = 0; i < mrs.d(); ++i) {
    const auto b = abs_bound(mrs.state_reward_law(i));
    if (!b) return 60;
    k = std::max(k, *b);
  }
  if (k == 0.0) return 1;
  constexpr double eps = 1e-9;
  const double t = std::log(eps * (1.0 - mrs.gamma) / k) / std::log(mrs.gamma);
  return std::max(1, static_cast<int>(std::ceil(t)));
}

/// n_samples truncated returns per start state. Each (state, sample) pair
/// draws from its own derived stream, so output is bit-identical for any
/// worker count.
inline EmpiricalReturnVector empirical_return_vector(const MarkovRewardSystem& mrs, int T,
                                                     int n_samples, std::uint64_t seed,
                                                     int workers = 1) {
  if (n_samples < 1) throw std::invalid_argument("empirical_return_vector: n_samples must be >= 1");
  const int d = mrs.d();
  std::vector<std::vector<double>> draws(d, std::vector<double>(n_samples, 0.0));
  parallel_for(d * ((n_samples + 8191) / 8192), workers, [&](int task) {
    const int blocks = (n_samples + 8191) / 8192;
    const int i = task / blocks;
    const int b = task % blocks;
    const int lo = b * 8192;
    const int hi = std::min(n_samples, lo + 8192);
    for (int k = lo; k < hi; ++k) {
      RngStream rng(seed, {stream_domain::returns, static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(k)});
      draws[i][k] = sample_return(mrs, i, T, rng);
    }
  });
  EmpiricalReturnVector out;
  out.reserve(d);
  for (int i = 0; i < d; ++i) out.emplace_back(std::move(draws[i]));
  return out;
}

/// Heuristic convergence probe motivated by the root test: a convergent
/// discounted series has gamma^t |R_t| > 1 for only finitely many t, so late
/// exceedances past a burn-in of max(20, T/20) steps flag likely divergence.
/// fraction_large_terms reports the exceedance fraction over the whole run.
struct DivergenceReport {
  double fraction_large_terms = 0.0;
  bool suspected_divergence = false;
};

inline DivergenceReport divergence_diagnostic(const MarkovRewardSystem& mrs, int i, int T,
                                              RngStream& rng) {
  if (T < 100) throw std::invalid_argument("divergence_diagnostic: T must be >= 100");
  const int burn_in = std::max(20, T / 20);
  DivergenceReport out;
  int exceed = 0;
  double disc = 1.0;
  int cur = i;
  for (int t = 0; t < T; ++t) {
    const int next = detail::categorical(mrs.p[cur], rng.uniform01());
    const double r = sample(mrs.mu[cur][next], rng);
    if (disc * std::abs(r) > 1.0) {
      ++exceed;
      if (t >= burn_in) out.suspected_divergence = true;
    }
    disc *= mrs.gamma;
    cur = next;
  }
  out.fraction_large_terms = static_cast<double>(exceed) / T;
  return out;
}

/// Hill tail-index estimate from the top k order statistics:
/// alpha_hat = k / sum_{j<=k} log(X_(n-j+1) / X_(n-k)). Samples must be
/// sorted ascending.
inline double hill_estimator(std::span<const double> sorted_samples, int k) {
  const int n = static_cast<int>(sorted_samples.size());
  if (k < 1 || k >= n) throw InsufficientTailSamplesError("hill_estimator: need 1 <= k < n");
  const double threshold = sorted_samples[n - 1 - k];
  if (!(threshold > 0.0))
    throw InsufficientTailSamplesError("hill_estimator: order statistic X_(n-k) must be > 0");
  double s = 0.0;
  for (int j = 0; j < k; ++j) s += std::log(sorted_samples[n - 1 - j] / threshold);
  if (!(s > 0.0)) throw InsufficientTailSamplesError("hill_estimator: degenerate tail");
  return k / s;
}

inline int default_hill_k(int n) {
  return std::max(1, static_cast<int>(std::floor(std::pow(n, 0.6))));
}

/// Empirical exceedance frequencies at the probe points.
struct TailProbe {
  double x = 0.0;
  double upper = 0.0;  // P_hat[G > x]
  double lower = 0.0;  // P_hat[G < -x]
};

inline std::vector<TailProbe> tail_ratio(std::span<const double> sorted_samples,
                                         std::span<const double> probes) {
  const double n = static_cast<double>(sorted_samples.size());
  std::vector<TailProbe> out;
  out.reserve(probes.size());
  for (double x : probes) {
    const auto above = std::upper_bound(sorted_samples.begin(), sorted_samples.end(), x);
    const auto below = std::lower_bound(sorted_samples.begin(), sorted_samples.end(), -x);
    out.push_back({x, static_cast<double>(sorted_samples.end() - above) / n,
                   static_cast<double>(below - sorted_samples.begin()) / n});
  }
  return out;
}

/// Grid range selection for the solver: exact bounds [lo, hi]/(1-gamma) when
/// every reward law is bounded, otherwise the 1e-5 .. 1-1e-5 quantiles of a
/// 10^4-sample pre-pass widened by 10%. Always contains 0 so the delta_0
/// start is representable. Unbounded systems need a seed.
inline Grid suggest_grid(const MarkovRewardSystem& mrs, int n,
                         std::optional<std::uint64_t> seed = std::nullopt) {
  if (n < 2) throw std::invalid_argument("suggest_grid: n must be >= 2");
  double lo = kInf, hi = -kInf;
  bool bounded = true;
  for (int i = 0; i < mrs.d() && bounded; ++i) {
    const auto b = support_bounds(mrs.state_reward_law(i));
    if (!b) {
      bounded = false;
      break;
    }
    lo = std::min(lo, b->first);
    hi = std::max(hi, b->second);
  }
  if (bounded) {
    double x_min = std::min(0.0, lo / (1.0 - mrs.gamma));
    double x_max = std::max(0.0, hi / (1.0 - mrs.gamma));
    if (x_min == x_max) {  // all-zero rewards
      x_min -= 1.0;
      x_max += 1.0;
    }
    return Grid{x_min, x_max, n};
  }
  if (!seed)
    throw std::invalid_argument(
        "suggest_grid: unbounded rewards need a seed for the Monte Carlo pre-pass");
  constexpr int kPrePass = 10000;
  std::vector<double> pool;
  pool.reserve(static_cast<std::size_t>(kPrePass) * mrs.d());
  const int T = 60;
  for (int i = 0; i < mrs.d(); ++i) {
    for (int k = 0; k < kPrePass; ++k) {
      RngStream rng(*seed, {stream_domain::grid_prepass, static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(k)});
      pool.push_back(sample_return(mrs, i, T, rng));
    }
  }
  std::sort(pool.begin(), pool.end());
  const auto q = [&](double u) {
    const std::size_t k = std::min(pool.size() - 1,
                                   static_cast<std::size_t>(u * static_cast<double>(pool.size())));
    return pool[k];
  };
  double x_min = std::min(0.0, q(1e-5));
  double x_max = std::max(0.0, q(1.0 - 1e-5));
  const double pad = 0.1 * (x_max - x_min);
  x_min -= pad;
  x_max += pad;
  if (!(x_min < x_max)) {
    x_min -= 1.0;
    x_max += 1.0;
  }
  return Grid{x_min, x_max, n};
}

}  // namespace dbe
