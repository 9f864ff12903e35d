#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dbe/mrp.hpp"

namespace dbe {

/// Structural classification of the index chain: strongly connected
/// components, essential (= recurrent) states, and the reachability relation.
struct ChainClassification {
  std::vector<std::vector<int>> sccs;     // partition of [d]
  std::vector<int> scc_of;                // state -> component id
  std::vector<bool> essential;            // per state
  std::vector<std::vector<bool>> reach;   // reach[i][j]: i -> j (reflexive, transitive)
};

/// Fixed-point existence verdict: the log+ moment must be finite for the
/// reward law of every essential state.
struct ExistenceReport {
  bool exists = true;
  std::vector<int> offending_states;
  std::vector<bool> per_state_log_moment;
};

/// Discounted visit weights w = (1 - gamma^alpha) (Id - gamma^alpha p)^(-1):
/// w[i][j] is the probability of sitting at j at an independent
/// Geometric(1 - gamma^alpha) time when started at i.
struct WeightMatrix {
  double alpha = 1.0;
  std::vector<std::vector<double>> w;
};

namespace detail {

inline void check_stochastic(const std::vector<std::vector<double>>& p) {
  const std::size_t d = p.size();
  if (d == 0) throw std::invalid_argument("transition matrix: empty");
  for (const auto& row : p) {
    if (row.size() != d) throw std::invalid_argument("transition matrix: not square");
    double sum = 0.0;
    for (double x : row) {
      if (x < 0.0 || x > 1.0)
        throw std::invalid_argument("transition matrix: entry outside [0,1]");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("transition matrix: row not stochastic");
  }
}

// Iterative Tarjan SCC over edges {(i,j): p[i][j] > 0}. Accessibility is a
// structural property, so strict positivity with no epsilon.
inline std::pair<std::vector<int>, int> tarjan_scc(const std::vector<std::vector<double>>& p) {
  const int d = static_cast<int>(p.size());
  std::vector<int> index(d, -1), low(d, 0), comp(d, -1);
  std::vector<bool> on_stack(d, false);
  std::vector<int> stack;
  int next_index = 0, n_comp = 0;

  struct Frame {
    int v;
    int j;
  };
  for (int root = 0; root < d; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      bool descended = false;
      while (f.j < d) {
        const int w = f.j++;
        if (p[f.v][w] <= 0.0) continue;
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
      }
      if (descended) continue;
      if (low[f.v] == index[f.v]) {
        while (true) {
          const int w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = n_comp;
          if (w == f.v) break;
        }
        ++n_comp;
      }
      const int v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  return {comp, n_comp};
}

}  // namespace detail

inline ChainClassification classify(const std::vector<std::vector<double>>& p) {
  detail::check_stochastic(p);
  const int d = static_cast<int>(p.size());
  auto [comp, n_comp] = detail::tarjan_scc(p);

  ChainClassification out;
  out.scc_of = comp;
  out.sccs.assign(n_comp, {});
  for (int i = 0; i < d; ++i) out.sccs[comp[i]].push_back(i);

  // Essential <=> the state's SCC has no edge leaving it.
  std::vector<bool> scc_has_exit(n_comp, false);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (p[i][j] > 0.0 && comp[i] != comp[j]) scc_has_exit[comp[i]] = true;
  out.essential.resize(d);
  for (int i = 0; i < d; ++i) out.essential[i] = !scc_has_exit[comp[i]];

  // Reflexive-transitive reachability by BFS from each state.
  out.reach.assign(d, std::vector<bool>(d, false));
  for (int i = 0; i < d; ++i) {
    std::vector<int> queue{i};
    out.reach[i][i] = true;
    while (!queue.empty()) {
      const int v = queue.back();
      queue.pop_back();
      for (int j = 0; j < d; ++j) {
        if (p[v][j] > 0.0 && !out.reach[i][j]) {
          out.reach[i][j] = true;
          queue.push_back(j);
        }
      }
    }
  }
  return out;
}

/// States reachable from i (always includes i).
inline std::vector<int> reachable_from(const ChainClassification& c, int i) {
  std::vector<int> out;
  for (std::size_t j = 0; j < c.reach[i].size(); ++j)
    if (c.reach[i][j]) out.push_back(static_cast<int>(j));
  return out;
}

/// Decide fixed-point existence: every essential state's reward law must
/// have a finite log+ moment; inessential states are exempt.
inline ExistenceReport existence_check(const MarkovRewardSystem& mrs) {
  const ChainClassification c = classify(mrs.p);
  ExistenceReport out;
  const int d = mrs.d();
  out.per_state_log_moment.resize(d);
  for (int i = 0; i < d; ++i) {
    out.per_state_log_moment[i] = log_moment_finite(mrs.state_reward_law(i));
    if (c.essential[i] && !out.per_state_log_moment[i]) {
      out.exists = false;
      out.offending_states.push_back(i);
    }
  }
  return out;
}

/// w = (1 - gamma^alpha) (Id - gamma^alpha p)^(-1) by a dense partial-pivot
/// solve; the matrix is invertible since gamma^alpha < 1 and p is stochastic.
inline WeightMatrix geometric_visit_weights(const std::vector<std::vector<double>>& p,
                                            double gamma, double alpha) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("geometric_visit_weights: gamma must be in (0,1)");
  if (!(alpha > 0.0)) throw std::invalid_argument("geometric_visit_weights: alpha must be > 0");
  detail::check_stochastic(p);
  const int d = static_cast<int>(p.size());
  const double ga = std::pow(gamma, alpha);

  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) -= ga * p[i][j];
  const Eigen::MatrixXd sol =
      m.partialPivLu().solve((1.0 - ga) * Eigen::MatrixXd::Identity(d, d));

  WeightMatrix out;
  out.alpha = alpha;
  out.w.assign(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out.w[i][j] = sol(i, j);
  return out;
}

}  // namespace dbe
