#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fscb {

/// Adjacency-list digraph on vertices 0..n-1. Parallel edges are allowed
/// but irrelevant to every algorithm here.
struct Digraph {
  std::vector<std::vector<int>> out;

  explicit Digraph(int n = 0) : out(n) {}
  int size() const { return static_cast<int>(out.size()); }
  void add_edge(int u, int v) { out[u].push_back(v); }
};

/// Vertices reachable from `start` (including `start`).
inline std::vector<char> reachable_from(const Digraph& g, int start) {
  std::vector<char> seen(g.size(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : g.out[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

inline Digraph reversed(const Digraph& g) {
  Digraph r(g.size());
  for (int u = 0; u < g.size(); ++u)
    for (int v : g.out[u]) r.add_edge(v, u);
  return r;
}

/// True iff every vertex is reachable from every other vertex.
inline bool strongly_connected(const Digraph& g) {
  if (g.size() == 0) return false;
  auto fwd = reachable_from(g, 0);
  auto bwd = reachable_from(reversed(g), 0);
  for (int v = 0; v < g.size(); ++v)
    if (!fwd[v] || !bwd[v]) return false;
  return true;
}

/// Strongly connected components, Kosaraju with explicit stacks.
/// Returns component id per vertex; ids are in reverse topological order
/// (an edge between components goes from a higher id to a lower one... see
/// note below) -- callers should not rely on ordering, only on membership.
inline std::vector<int> scc_ids(const Digraph& g) {
  int n = g.size();
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  // First pass: finish-time order via iterative DFS.
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::pair<int, size_t>> stack{{s, 0}};
    seen[s] = 1;
    while (!stack.empty()) {
      auto& [u, i] = stack.back();
      if (i < g.out[u].size()) {
        int v = g.out[u][i++];
        if (!seen[v]) {
          seen[v] = 1;
          stack.emplace_back(v, 0);
        }
      } else {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }
  // Second pass on the reverse graph in decreasing finish time.
  Digraph r = reversed(g);
  std::vector<int> comp(n, -1);
  int next_id = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[*it] >= 0) continue;
    std::vector<int> stack{*it};
    comp[*it] = next_id;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : r.out[u]) {
        if (comp[v] < 0) {
          comp[v] = next_id;
          stack.push_back(v);
        }
      }
    }
    ++next_id;
  }
  return comp;
}

/// Component ids that have no edge leaving the component (closed classes
/// of a Markov chain when `g` holds its positive-probability transitions).
inline std::vector<std::vector<int>> closed_classes(const Digraph& g) {
  std::vector<int> comp = scc_ids(g);
  int nc = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<char> open(nc, 0);
  for (int u = 0; u < g.size(); ++u)
    for (int v : g.out[u])
      if (comp[u] != comp[v]) open[comp[u]] = 1;
  std::vector<std::vector<int>> classes(nc);
  for (int v = 0; v < g.size(); ++v) classes[comp[v]].push_back(v);
  std::vector<std::vector<int>> closed;
  for (int c = 0; c < nc; ++c)
    if (!open[c]) closed.push_back(std::move(classes[c]));
  return closed;
}

/// Period of one strongly connected class: gcd of cycle lengths through it.
/// `members` must be a single SCC of `g` containing at least one edge.
inline int class_period(const Digraph& g, const std::vector<int>& members) {
  std::vector<int> level(g.size(), -1);
  std::vector<char> inside(g.size(), 0);
  for (int v : members) inside[v] = 1;
  int root = members.front();
  level[root] = 0;
  std::vector<int> queue{root};
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    int u = queue[qi];
    for (int v : g.out[u]) {
      if (inside[v] && level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      }
    }
  }
  int period = 0;
  for (int u : members) {
    for (int v : g.out[u]) {
      if (!inside[v]) continue;
      period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
    }
  }
  if (period == 0) {
    throw std::domain_error("class_period: class has no internal cycle");
  }
  return period;
}

/// Stationary distribution of a row-stochastic matrix restricted to one
/// closed class. Entries outside the class come back as zero. Solved by
/// Gaussian elimination with partial pivoting on (M^T - I), with the last
/// equation replaced by the normalization sum(pi) = 1.
inline std::vector<double> stationary_distribution(
    const std::vector<std::vector<double>>& m, const std::vector<int>& members) {
  int n = static_cast<int>(m.size());
  int nc = static_cast<int>(members.size());
  if (nc == 0) throw std::invalid_argument("stationary_distribution: empty class");
  std::vector<int> local(n, -1);
  for (int i = 0; i < nc; ++i) local[members[i]] = i;

  std::vector<std::vector<double>> a(nc, std::vector<double>(nc + 1, 0.0));
  for (int j = 0; j < nc; ++j) {
    for (int i = 0; i < nc; ++i) {
      a[j][i] = m[members[i]][members[j]] - (i == j ? 1.0 : 0.0);
    }
  }
  for (int i = 0; i < nc; ++i) a[nc - 1][i] = 1.0;
  a[nc - 1][nc] = 1.0;

  for (int col = 0; col < nc; ++col) {
    int piv = col;
    for (int r = col + 1; r < nc; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    if (std::abs(a[col][col]) < 1e-300) {
      throw std::domain_error("stationary_distribution: singular system");
    }
    for (int r = 0; r < nc; ++r) {
      if (r == col) continue;
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c = col; c <= nc; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> pi(n, 0.0);
  double total = 0.0;
  for (int i = 0; i < nc; ++i) {
    double v = a[i][nc] / a[i][i];
    if (v < 0.0 && v > -1e-12) v = 0.0;
    pi[members[i]] = v;
    total += v;
  }
  for (int i = 0; i < nc; ++i) pi[members[i]] /= total;
  return pi;
}

/// Spectral radius of a nonnegative matrix with a strongly connected
/// support graph, by power iteration on (A + I); the shift removes any
/// periodicity so the iteration always converges. Relative tolerance on
/// the eigenvalue estimate.
inline double perron_root(const std::vector<std::vector<double>>& a,
                          double rel_tol = 1e-14, int max_iters = 200000) {
  int n = static_cast<int>(a.size());
  if (n == 0) throw std::invalid_argument("perron_root: empty matrix");
  std::vector<double> v(n, 1.0 / n), w(n);
  for (int it = 0; it < max_iters; ++it) {
    // Iterate A+I so the matrix is primitive and v stays strictly positive,
    // keeping the component ratios below well defined.
    for (int i = 0; i < n; ++i) {
      double s = v[i];
      for (int j = 0; j < n; ++j) s += a[i][j] * v[j];
      w[i] = s;
    }
    // Collatz-Wielandt: min_i w_i/v_i <= lambda+1 <= max_i w_i/v_i at every
    // iterate, so a tight bracket certifies the value; scalar estimates
    // without the bracket can agree between iterations far from the root.
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      double ratio = w[i] / v[i];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      norm += w[i];
    }
    if (hi - lo <= rel_tol * hi) return 0.5 * (lo + hi) - 1.0;
    for (int i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  throw std::runtime_error("perron_root: power iteration did not converge");
}

}  // namespace fscb
