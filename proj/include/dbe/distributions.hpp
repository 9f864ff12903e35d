#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "dbe/reward_laws.hpp"  // Atom

namespace dbe {

// ---------------------------------------------------------------------------
// Representations
// ---------------------------------------------------------------------------

/// Uniformly spaced support grid on [x_min, x_max] with n points.
struct Grid {
  double x_min = 0.0;
  double x_max = 1.0;
  int n = 2;

  double spacing() const { return (x_max - x_min) / (n - 1); }
  double point(int k) const { return x_min + k * spacing(); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

inline void check_grid(const Grid& g) {
  if (!(g.x_min < g.x_max)) throw std::invalid_argument("Grid: requires x_min < x_max");
  if (g.n < 2) throw std::invalid_argument("Grid: requires n >= 2");
}

/// Probability law supported on the points of a fixed grid.
struct GridDistribution {
  Grid grid;
  std::vector<double> probs;
};

inline GridDistribution make_grid_distribution(const Grid& g, std::vector<double> probs) {
  check_grid(g);
  if (static_cast<int>(probs.size()) != g.n)
    throw std::invalid_argument("GridDistribution: probs size != grid n");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("GridDistribution: negative prob");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("GridDistribution: probs must sum to 1");
  return GridDistribution{g, std::move(probs)};
}

/// Point mass at `value`, projected onto the grid.
GridDistribution grid_delta(const Grid& g, double value);

/// Sorted sample set interpreted as the empirical law (equal weights).
struct EmpiricalDistribution {
  std::vector<double> samples;

  explicit EmpiricalDistribution(std::vector<double> s) : samples(std::move(s)) {
    if (samples.empty()) throw std::invalid_argument("EmpiricalDistribution: empty");
    std::sort(samples.begin(), samples.end());
  }
};

/// Vector of per-state grid laws sharing one grid.
using ReturnVector = std::vector<GridDistribution>;
/// Vector of per-state empirical laws.
using EmpiricalReturnVector = std::vector<EmpiricalDistribution>;

inline void check_shared_grid(const ReturnVector& v) {
  if (v.empty()) throw std::invalid_argument("ReturnVector: empty");
  for (const GridDistribution& d : v)
    if (!(d.grid == v.front().grid))
      throw std::invalid_argument("ReturnVector: components must share one grid");
}

// ---------------------------------------------------------------------------
// Atomic view: every representation here is a finite weighted atom set, which
// lets the metrics below work uniformly across representations.
// ---------------------------------------------------------------------------

namespace detail {

struct AtomView {
  std::vector<double> values;  // sorted ascending
  std::vector<double> probs;
};

inline AtomView atom_view(const GridDistribution& d) {
  AtomView v;
  v.values.reserve(d.probs.size());
  v.probs.reserve(d.probs.size());
  for (int k = 0; k < d.grid.n; ++k) {
    if (d.probs[k] == 0.0) continue;
    v.values.push_back(d.grid.point(k));
    v.probs.push_back(d.probs[k]);
  }
  if (v.values.empty()) {  // degenerate all-zero vector; treat as delta at x_min
    v.values.push_back(d.grid.x_min);
    v.probs.push_back(1.0);
  }
  return v;
}

inline AtomView atom_view(const EmpiricalDistribution& d) {
  AtomView v;
  v.values = d.samples;
  v.probs.assign(d.samples.size(), 1.0 / static_cast<double>(d.samples.size()));
  return v;
}

inline AtomView atom_view(std::span<const Atom> atoms) {
  std::vector<Atom> sorted(atoms.begin(), atoms.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Atom& a, const Atom& b) { return a.value < b.value; });
  AtomView v;
  v.values.reserve(sorted.size());
  v.probs.reserve(sorted.size());
  for (const Atom& a : sorted) {
    v.values.push_back(a.value);
    v.probs.push_back(a.prob);
  }
  return v;
}

/// Exact p-Wasserstein between two atomic laws via the quantile coupling:
/// merge the cumulative-probability breakpoints; between consecutive ones
/// both quantile functions are constant.
inline double wasserstein_views(double p, const AtomView& a, const AtomView& b) {
  std::size_t i = 0, j = 0;
  double ca = a.probs[0], cb = b.probs[0];
  double prev = 0.0, acc = 0.0;
  while (true) {
    const double u = std::min(ca, cb);
    const double du = u - prev;
    if (du > 0.0) {
      const double gap = std::abs(a.values[i] - b.values[j]);
      acc += (p == 1.0) ? du * gap : du * std::pow(gap, p);
    }
    prev = u;
    const bool adv_a = ca <= cb;
    const bool adv_b = cb <= ca;
    if (adv_a) {
      if (++i >= a.values.size()) break;
      ca += a.probs[i];
    }
    if (adv_b) {
      if (++j >= b.values.size()) break;
      cb += b.probs[j];
    }
  }
  return (p == 1.0) ? acc : std::pow(acc, 1.0 / p);
}

/// Exact Kolmogorov distance between two atomic laws.
inline double ks_views(const AtomView& a, const AtomView& b) {
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, best = 0.0;
  while (i < a.values.size() || j < b.values.size()) {
    double x;
    if (j >= b.values.size() || (i < a.values.size() && a.values[i] < b.values[j]))
      x = a.values[i];
    else
      x = b.values[j];
    while (i < a.values.size() && a.values[i] == x) fa += a.probs[i++];
    while (j < b.values.size() && b.values[j] == x) fb += b.probs[j++];
    best = std::max(best, std::abs(fa - fb));
  }
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pointwise queries
// ---------------------------------------------------------------------------

inline double cdf(const GridDistribution& d, double x) {
  if (x < d.grid.x_min) return 0.0;
  double s = 0.0;
  for (int k = 0; k < d.grid.n; ++k) {
    if (d.grid.point(k) > x) break;
    s += d.probs[k];
  }
  return s;
}

inline double cdf(const EmpiricalDistribution& d, double x) {
  const auto it = std::upper_bound(d.samples.begin(), d.samples.end(), x);
  return static_cast<double>(it - d.samples.begin()) / static_cast<double>(d.samples.size());
}

template <class Dist>
double tail_above(const Dist& d, double x) {
  return 1.0 - cdf(d, x);
}

/// Left-continuous generalized inverse of the CDF.
inline double quantile(const GridDistribution& d, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("quantile: u must be in (0,1]");
  double c = 0.0;
  for (int k = 0; k < d.grid.n; ++k) {
    c += d.probs[k];
    if (c >= u) return d.grid.point(k);
  }
  return d.grid.x_max;
}

inline double quantile(const EmpiricalDistribution& d, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("quantile: u must be in (0,1]");
  const std::size_t n = d.samples.size();
  const std::size_t k = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::ceil(u * n)) - 1);
  return d.samples[k];
}

inline double moment(const GridDistribution& d, int k) {
  double s = 0.0;
  for (int i = 0; i < d.grid.n; ++i) s += d.probs[i] * std::pow(d.grid.point(i), k);
  return s;
}

inline double moment(const EmpiricalDistribution& d, int k) {
  double s = 0.0;
  for (double x : d.samples) s += std::pow(x, k);
  return s / static_cast<double>(d.samples.size());
}

template <class Dist>
double mean(const Dist& d) {
  return moment(d, 1);
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

template <class D1, class D2>
double wasserstein(double p, const D1& a, const D2& b) {
  if (!(p >= 1.0)) throw std::invalid_argument("wasserstein: order must be >= 1");
  return detail::wasserstein_views(p, detail::atom_view(a), detail::atom_view(b));
}

inline double wasserstein(double p, std::span<const Atom> a, std::span<const Atom> b) {
  if (!(p >= 1.0)) throw std::invalid_argument("wasserstein: order must be >= 1");
  return detail::wasserstein_views(p, detail::atom_view(a), detail::atom_view(b));
}

template <class D1, class D2>
double ks_distance(const D1& a, const D2& b) {
  return detail::ks_views(detail::atom_view(a), detail::atom_view(b));
}

/// max over components of the p-Wasserstein distance.
template <class V1, class V2>
double sup_wasserstein(double p, const V1& a, const V2& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sup_wasserstein: length mismatch");
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, wasserstein(p, a[i], b[i]));
  return best;
}

// ---------------------------------------------------------------------------
// Pushforward / mixture / projection
// ---------------------------------------------------------------------------

/// Law of r + gamma*X for grid-backed X, as an off-grid atom list. Re-grid
/// with project_to_grid.
inline std::vector<Atom> push_affine(const GridDistribution& d, double r, double gamma) {
  std::vector<Atom> out;
  out.reserve(d.probs.size());
  for (int k = 0; k < d.grid.n; ++k) {
    if (d.probs[k] == 0.0) continue;
    out.push_back({r + gamma * d.grid.point(k), d.probs[k]});
  }
  if (out.empty()) out.push_back({r + gamma * d.grid.x_min, 1.0});
  return out;
}

inline EmpiricalDistribution push_affine(const EmpiricalDistribution& d, double r, double gamma) {
  std::vector<double> s;
  s.reserve(d.samples.size());
  for (double x : d.samples) s.push_back(r + gamma * x);
  return EmpiricalDistribution(std::move(s));
}

/// Convex combination of grid laws on one shared grid.
inline GridDistribution mixture(const std::vector<std::pair<double, const GridDistribution*>>& parts) {
  if (parts.empty()) throw std::invalid_argument("mixture: empty");
  double wsum = 0.0;
  for (const auto& [w, d] : parts) {
    if (w < 0.0) throw std::invalid_argument("mixture: negative weight");
    if (!(d->grid == parts.front().second->grid))
      throw std::invalid_argument("mixture: incompatible grids");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("mixture: weights must sum to 1");
  GridDistribution out{parts.front().second->grid,
                       std::vector<double>(parts.front().second->probs.size(), 0.0)};
  for (const auto& [w, d] : parts)
    for (std::size_t k = 0; k < out.probs.size(); ++k) out.probs[k] += w * d->probs[k];
  return out;
}

struct ProjectionResult {
  GridDistribution dist;
  double clamped_mass = 0.0;
};

namespace detail {

/// Floating-point slop allowed before boundary mass counts as clamped.
inline double boundary_tol(const Grid& g) {
  const double scale =
      std::max({std::abs(g.x_min), std::abs(g.x_max), g.x_max - g.x_min});
  return 8.0 * std::numeric_limits<double>::epsilon() * scale;
}

/// Accumulate `weight`-scaled atoms onto `out` via the two-point linear split
/// (mean-preserving for interior atoms). Returns the clamped mass.
inline double project_accumulate(std::span<const Atom> atoms, double weight, const Grid& g,
                                 std::vector<double>& out) {
  const double h = g.spacing();
  const double tol = boundary_tol(g);
  double clamped = 0.0;
  for (const Atom& a : atoms) {
    const double mass = weight * a.prob;
    if (mass == 0.0) continue;
    if (a.value <= g.x_min) {
      out.front() += mass;
      if (g.x_min - a.value > tol) clamped += mass;
      continue;
    }
    if (a.value >= g.x_max) {
      out.back() += mass;
      if (a.value - g.x_max > tol) clamped += mass;
      continue;
    }
    const double pos = (a.value - g.x_min) / h;
    int k = static_cast<int>(pos);
    if (k >= g.n - 1) k = g.n - 2;
    const double frac = pos - k;
    out[k] += mass * (1.0 - frac);
    out[k + 1] += mass * frac;
  }
  return clamped;
}

}  // namespace detail

/// Split each atom's mass linearly between its two nearest grid points.
/// Out-of-range atoms clamp to the boundary point; the clamped total is
/// reported rather than silently absorbed.
inline ProjectionResult project_to_grid(std::span<const Atom> atoms, const Grid& g) {
  check_grid(g);
  ProjectionResult res{GridDistribution{g, std::vector<double>(g.n, 0.0)}, 0.0};
  res.clamped_mass = detail::project_accumulate(atoms, 1.0, g, res.dist.probs);
  return res;
}

inline GridDistribution grid_delta(const Grid& g, double value) {
  const Atom a{value, 1.0};
  return project_to_grid(std::span<const Atom>(&a, 1), g).dist;
}

}  // namespace dbe
