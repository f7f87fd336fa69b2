#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fscb/channel.hpp"
#include "fscb/dp.hpp"
#include "fscb/entropy.hpp"
#include "fscb/graph.hpp"
#include "fscb/optimize.hpp"

namespace fscb {

struct NotConnectedError : std::domain_error {
  using std::domain_error::domain_error;
};
struct NotSingleClassError : std::domain_error {
  using std::domain_error::domain_error;
};
struct PeriodicChainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct NoFeasibleQError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Auxiliary vertex set tracking input history: phi[v][x] names the vertex
/// reached after input x, or -1 where the graph has no such edge.
struct VGraph {
  int num_vertices = 0;
  std::vector<std::vector<int>> phi;  // [v][x] -> v' or -1
  int v0 = 0;
  std::vector<std::string> vertex_names;

  bool has_edge(int v, int x) const { return phi[v][x] >= 0; }
};

inline void validate_vgraph(const VGraph& vg, int num_inputs) {
  if (vg.num_vertices < 1) throw std::invalid_argument("vgraph: empty vertex set");
  if (static_cast<int>(vg.phi.size()) != vg.num_vertices) {
    throw std::invalid_argument("vgraph: phi has wrong shape");
  }
  Digraph g(vg.num_vertices);
  for (int v = 0; v < vg.num_vertices; ++v) {
    if (static_cast<int>(vg.phi[v].size()) != num_inputs) {
      throw std::invalid_argument("vgraph: phi row " + std::to_string(v) +
                                  " has wrong length");
    }
    for (int x = 0; x < num_inputs; ++x) {
      int w = vg.phi[v][x];
      if (w < -1 || w >= vg.num_vertices) {
        throw std::invalid_argument("vgraph: phi out of range at (" + std::to_string(v) +
                                    "," + std::to_string(x) + ")");
      }
      if (w >= 0) g.add_edge(v, w);
    }
  }
  if (vg.v0 < 0 || vg.v0 >= vg.num_vertices) {
    throw std::invalid_argument("vgraph: v0 out of range");
  }
  if (!strongly_connected(g)) {
    throw std::invalid_argument("vgraph: graph is not irreducible");
  }
}

/// Single vertex absorbing every input: the bound degenerates to a
/// state-only single-letter bound.
inline VGraph trivial_vgraph(int num_inputs) {
  VGraph vg;
  vg.num_vertices = 1;
  vg.phi.assign(1, std::vector<int>(num_inputs, 0));
  vg.vertex_names = {"*"};
  return vg;
}

/// Vertices are the last `memory` inputs; every input has an edge. Vertex
/// ids encode the history base-|X| with the most recent input in the least
/// significant digit, so vertex 0 is the all-zero history.
inline VGraph memory_vgraph(int num_inputs, int memory) {
  if (memory < 1) throw std::invalid_argument("memory_vgraph: memory must be >= 1");
  double size = std::pow(static_cast<double>(num_inputs), memory);
  if (size > 4096.0) throw std::invalid_argument("memory_vgraph: vertex set too large");
  int n = static_cast<int>(size + 0.5);
  VGraph vg;
  vg.num_vertices = n;
  vg.phi.assign(n, std::vector<int>(num_inputs, 0));
  vg.vertex_names.resize(n);
  for (int v = 0; v < n; ++v) {
    for (int x = 0; x < num_inputs; ++x) {
      vg.phi[v][x] = (v * num_inputs + x) % n;
    }
    std::string name(memory, '0');
    int rest = v;
    for (int i = memory - 1; i >= 0; --i) {
      name[i] = static_cast<char>('0' + rest % num_inputs);
      rest /= num_inputs;
    }
    vg.vertex_names[v] = name;
  }
  return vg;
}

/// The channel's own constraint structure as a V-graph: edges mirror the
/// allowed transitions, so a vertex always tracks the channel state.
inline VGraph constraint_copy_vgraph(const Fsc& fsc) {
  VGraph vg;
  vg.num_vertices = fsc.num_states;
  vg.phi.assign(fsc.num_states, std::vector<int>(fsc.num_inputs, -1));
  for (int s = 0; s < fsc.num_states; ++s)
    for (int x = 0; x < fsc.num_inputs; ++x)
      if (fsc.allowed[s][x]) vg.phi[s][x] = fsc.next[s][x];
  vg.v0 = fsc.initial_state;
  vg.vertex_names = fsc.state_names;
  return vg;
}

/// Product of channel states and V-graph vertices. An (x,y)-labeled edge
/// leaves (s,v) exactly when x is allowed at s, phi(v,x) exists, and
/// P(y|x,s) > 0.
struct ProductGraph {
  int num_states = 0;
  int num_vertices = 0;  // V-graph vertices

  struct Edge {
    int x;
    int y;
    int to;  // packed product vertex
  };
  std::vector<std::vector<Edge>> edges;            // per packed vertex
  std::vector<std::vector<int>> feasible_inputs;   // per packed vertex

  int size() const { return num_states * num_vertices; }
  int pack(int s, int v) const { return s * num_vertices + v; }
  int state_of(int u) const { return u / num_vertices; }
  int vertex_of(int u) const { return u % num_vertices; }
};

inline ProductGraph build_product(const Fsc& fsc, const VGraph& vg) {
  validate_vgraph(vg, fsc.num_inputs);
  ProductGraph pg;
  pg.num_states = fsc.num_states;
  pg.num_vertices = vg.num_vertices;
  pg.edges.assign(pg.size(), {});
  pg.feasible_inputs.assign(pg.size(), {});
  for (int s = 0; s < fsc.num_states; ++s) {
    for (int v = 0; v < vg.num_vertices; ++v) {
      int u = pg.pack(s, v);
      for (int x = 0; x < fsc.num_inputs; ++x) {
        if (!fsc.allowed[s][x] || !vg.has_edge(v, x)) continue;
        pg.feasible_inputs[u].push_back(x);
        int to = pg.pack(fsc.next[s][x], vg.phi[v][x]);
        for (int y = 0; y < fsc.num_outputs; ++y) {
          if (fsc.emission[s][x][y] > 0.0) pg.edges[u].push_back({x, y, to});
        }
      }
    }
  }
  return pg;
}

/// Input distribution per product vertex, plus the classification flags of
/// the chain it induces.
struct QDist {
  std::vector<std::vector<std::vector<double>>> q;  // [s][v][x]
  bool in_class_q = false;
  bool aperiodic = false;

  double operator()(int s, int v, int x) const { return q[s][v][x]; }
};

inline QDist zero_qdist(const Fsc& fsc, const VGraph& vg) {
  QDist qd;
  qd.q.assign(fsc.num_states,
              std::vector<std::vector<double>>(vg.num_vertices,
                                               std::vector<double>(fsc.num_inputs, 0.0)));
  return qd;
}

/// Uniform over the feasible inputs of each product vertex; rows with no
/// feasible input stay zero (such vertices cannot be part of any class).
inline QDist uniform_qdist(const Fsc& fsc, const VGraph& vg, const ProductGraph& pg) {
  QDist qd = zero_qdist(fsc, vg);
  for (int u = 0; u < pg.size(); ++u) {
    const auto& xs = pg.feasible_inputs[u];
    for (int x : xs) qd.q[pg.state_of(u)][pg.vertex_of(u)][x] = 1.0 / xs.size();
  }
  return qd;
}

/// Lifts a state policy to the product graph: each row is masked to the
/// feasible inputs and renormalized; rows the policy leaves empty fall back
/// to uniform so the result is stochastic wherever inputs exist.
inline QDist from_policy(const Fsc& fsc, const VGraph& vg, const Policy& policy) {
  ProductGraph pg = build_product(fsc, vg);
  QDist qd = zero_qdist(fsc, vg);
  for (int u = 0; u < pg.size(); ++u) {
    int s = pg.state_of(u), v = pg.vertex_of(u);
    const auto& xs = pg.feasible_inputs[u];
    if (xs.empty()) continue;
    double sum = 0.0;
    for (int x : xs) sum += policy.rows[s][x];
    if (sum > 1e-12) {
      for (int x : xs) qd.q[s][v][x] = policy.rows[s][x] / sum;
    } else {
      for (int x : xs) qd.q[s][v][x] = 1.0 / xs.size();
    }
  }
  return qd;
}

struct ClassifyResult {
  bool single_class = false;
  bool aperiodic = false;
  std::vector<int> class_members;              // the closed class when unique
  std::vector<std::vector<int>> closed;        // all closed classes found
};

/// Classifies the chain induced by Q on the product graph: keeps edges of
/// positive probability, finds the closed communicating classes (SCCs with
/// no exit whose members all have an outgoing edge), and checks whether the
/// unique one is aperiodic. Vertices with no outgoing mass are dead rather
/// than closed; they can never be recurrent.
inline ClassifyResult classify(const ProductGraph& pg, const QDist& q) {
  Digraph g(pg.size());
  std::vector<char> has_out(pg.size(), 0);
  for (int u = 0; u < pg.size(); ++u) {
    int s = pg.state_of(u), v = pg.vertex_of(u);
    std::vector<char> edge_done(pg.size(), 0);
    for (const auto& e : pg.edges[u]) {
      if (q(s, v, e.x) <= 0.0) continue;
      has_out[u] = 1;
      if (!edge_done[e.to]) {
        edge_done[e.to] = 1;
        g.add_edge(u, e.to);
      }
    }
  }
  ClassifyResult res;
  for (auto& cls : closed_classes(g)) {
    bool live = true;
    for (int u : cls) {
      if (!has_out[u]) live = false;
    }
    if (live) res.closed.push_back(std::move(cls));
  }
  res.single_class = res.closed.size() == 1;
  if (res.single_class) {
    res.class_members = res.closed.front();
    std::sort(res.class_members.begin(), res.class_members.end());
    res.aperiodic = class_period(g, res.class_members) == 1;
  }
  return res;
}

namespace detail {

inline void require_q_rows(const Fsc& fsc, const ProductGraph& pg, const QDist& q,
                           const std::vector<int>& members) {
  std::vector<char> feasible(fsc.num_inputs);
  for (int u : members) {
    int s = pg.state_of(u), v = pg.vertex_of(u);
    std::fill(feasible.begin(), feasible.end(), 0);
    for (int x : pg.feasible_inputs[u]) feasible[x] = 1;
    double sum = 0.0;
    for (int x = 0; x < fsc.num_inputs; ++x) {
      double mass = q(s, v, x);
      if (mass < -1e-12) throw std::invalid_argument("qdist: negative mass");
      if (!feasible[x] && mass > 1e-12) {
        throw std::invalid_argument("qdist: mass on a pair with no product edge at (" +
                                    std::to_string(s) + "," + std::to_string(v) + ")");
      }
      sum += mass;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("qdist: row at (" + std::to_string(s) + "," +
                                  std::to_string(v) + ") sums to " + std::to_string(sum));
    }
  }
}

inline std::vector<std::vector<double>> product_chain_matrix(const Fsc& fsc,
                                                             const ProductGraph& pg,
                                                             const QDist& q) {
  std::vector<std::vector<double>> m(pg.size(), std::vector<double>(pg.size(), 0.0));
  for (int u = 0; u < pg.size(); ++u) {
    int s = pg.state_of(u), v = pg.vertex_of(u);
    for (const auto& e : pg.edges[u]) {
      m[u][e.to] += q(s, v, e.x) * fsc.emission[s][e.x][e.y];
    }
  }
  return m;
}

}  // namespace detail

struct StationaryDist {
  std::vector<double> pi;  // over packed product vertices, zero off-class
  double balance_residual = 0.0;
};

/// Stationary law of the Q-induced chain; requires a unique aperiodic
/// closed class.
inline StationaryDist stationary(const ProductGraph& pg, const QDist& q, const Fsc& fsc) {
  ClassifyResult cls = classify(pg, q);
  if (!cls.single_class) {
    throw NotSingleClassError("stationary: chain has " + std::to_string(cls.closed.size()) +
                              " closed classes");
  }
  if (!cls.aperiodic) throw PeriodicChainError("stationary: closed class is periodic");
  detail::require_q_rows(fsc, pg, q, cls.class_members);

  auto m = detail::product_chain_matrix(fsc, pg, q);
  StationaryDist out;
  out.pi = stationary_distribution(m, cls.class_members);
  for (int u = 0; u < pg.size(); ++u) {
    double flow = 0.0;
    for (int w = 0; w < pg.size(); ++w) flow += out.pi[w] * m[w][u];
    out.balance_residual = std::max(out.balance_residual, std::abs(flow - out.pi[u]));
  }
  return out;
}

/// True iff every state can reach every state along allowed transitions;
/// the connectivity notion under which the single-letter bound is stated.
inline bool check_connected(const Fsc& fsc) {
  return strongly_connected(fsc.state_graph());
}

/// The single-letter bound I(X;Y|S,V) under the joint law
/// pi(s,v) Q(x|s,v) P(y|x,s): average over the stationary chain of the
/// divergence between each input's output law and the local output mixture.
inline double single_letter_bound(const Fsc& fsc, const VGraph& vg, const QDist& q) {
  if (!check_connected(fsc)) {
    throw NotConnectedError("single_letter_bound: channel state graph is not connected");
  }
  ProductGraph pg = build_product(fsc, vg);
  ClassifyResult cls = classify(pg, q);
  if (!cls.single_class) {
    throw NotSingleClassError("single_letter_bound: need a single closed class, found " +
                              std::to_string(cls.closed.size()));
  }
  if (!cls.aperiodic) {
    throw PeriodicChainError("single_letter_bound: the closed class is periodic");
  }
  StationaryDist stat = stationary(pg, q, fsc);

  KahanSum total;
  for (int u : cls.class_members) {
    int s = pg.state_of(u), v = pg.vertex_of(u);
    if (stat.pi[u] == 0.0) continue;
    std::vector<double> mix(fsc.num_outputs, 0.0);
    for (int x : pg.feasible_inputs[u]) {
      for (int y = 0; y < fsc.num_outputs; ++y) {
        mix[y] += q(s, v, x) * fsc.emission[s][x][y];
      }
    }
    for (int x : pg.feasible_inputs[u]) {
      double qx = q(s, v, x);
      if (qx <= 0.0) continue;
      for (int y = 0; y < fsc.num_outputs; ++y) {
        double p = fsc.emission[s][x][y];
        if (p <= 0.0) continue;
        total.add(stat.pi[u] * qx * p * std::log2(p / mix[y]));
      }
    }
  }
  return total.value();
}

/// Everything the bound evaluation produced, for reporting: the product
/// classification, the stationary law, the paired start vertex, the value.
struct VGraphBundle {
  VGraph vg;
  QDist q;
  ClassifyResult classification;
  StationaryDist stat;
  double value = 0.0;
  int v0 = -1;  // smallest v with (s0, v) in the closed class
};

inline VGraphBundle make_bundle(const Fsc& fsc, const VGraph& vg, const QDist& q) {
  VGraphBundle b;
  b.vg = vg;
  b.q = q;
  ProductGraph pg = build_product(fsc, vg);
  b.classification = classify(pg, q);
  b.q.in_class_q = b.classification.single_class;
  b.q.aperiodic = b.classification.aperiodic;
  b.value = single_letter_bound(fsc, vg, q);
  b.stat = stationary(pg, q, fsc);
  for (int u : b.classification.class_members) {
    if (pg.state_of(u) == fsc.initial_state) {
      b.v0 = pg.vertex_of(u);
      break;
    }
  }
  return b;
}

struct QOptions {
  int restarts = 16;
  std::uint64_t seed = 0;
};

struct OptimizedQ {
  QDist q;
  double value = 0.0;
};

/// Searches for the best Q by Nelder-Mead on softmax-parameterized rows
/// (uniform start plus seeded random restarts). Interior rows keep every
/// feasible edge present, so the classification is constant over the whole
/// search space: if the full feasible graph fails the class conditions, no
/// Q at all can satisfy them (dropping edges never merges classes nor
/// shrinks the period) and the search reports that directly.
inline OptimizedQ optimize_q(const Fsc& fsc, const VGraph& vg, const QOptions& opts = {}) {
  if (!check_connected(fsc)) {
    throw NotConnectedError("optimize_q: channel state graph is not connected");
  }
  ProductGraph pg = build_product(fsc, vg);
  QDist uniform = uniform_qdist(fsc, vg, pg);
  ClassifyResult cls = classify(pg, uniform);
  if (!cls.single_class) {
    throw NoFeasibleQError("optimize_q: no Q yields a single closed class on this V-graph");
  }
  if (!cls.aperiodic) {
    throw NoFeasibleQError("optimize_q: every feasible Q is periodic on this V-graph");
  }

  // Free coordinates: one logit per feasible input of each product vertex
  // with a choice to make.
  std::vector<int> free_vertices;
  int dim = 0;
  for (int u = 0; u < pg.size(); ++u) {
    if (pg.feasible_inputs[u].size() >= 2) {
      free_vertices.push_back(u);
      dim += static_cast<int>(pg.feasible_inputs[u].size());
    }
  }

  auto unpack = [&](const std::vector<double>& theta) {
    QDist qd = uniform;
    int at = 0;
    for (int u : free_vertices) {
      const auto& xs = pg.feasible_inputs[u];
      std::vector<double> logits(theta.begin() + at, theta.begin() + at + xs.size());
      at += static_cast<int>(xs.size());
      std::vector<double> row = softmax(logits);
      for (size_t i = 0; i < xs.size(); ++i) {
        qd.q[pg.state_of(u)][pg.vertex_of(u)][xs[i]] = row[i];
      }
    }
    return qd;
  };

  auto value_of = [&](const QDist& qd) {
    StationaryDist stat = stationary(pg, qd, fsc);
    KahanSum total;
    for (int u : cls.class_members) {
      int s = pg.state_of(u), v = pg.vertex_of(u);
      std::vector<double> mix(fsc.num_outputs, 0.0);
      for (int x : pg.feasible_inputs[u]) {
        for (int y = 0; y < fsc.num_outputs; ++y) {
          mix[y] += qd(s, v, x) * fsc.emission[s][x][y];
        }
      }
      for (int x : pg.feasible_inputs[u]) {
        double qx = qd(s, v, x);
        if (qx <= 0.0) continue;
        for (int y = 0; y < fsc.num_outputs; ++y) {
          double p = fsc.emission[s][x][y];
          if (p <= 0.0) continue;
          total.add(stat.pi[u] * qx * p * std::log2(p / mix[y]));
        }
      }
    }
    return total.value();
  };

  OptimizedQ best;
  best.q = uniform;
  best.value = value_of(uniform);
  if (dim == 0) {
    best.q.in_class_q = true;
    best.q.aperiodic = true;
    return best;
  }

  auto objective = [&](const std::vector<double>& theta) { return value_of(unpack(theta)); };
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.5);
  std::vector<double> best_theta(dim, 0.0);
  for (int r = 0; r <= opts.restarts; ++r) {
    std::vector<double> start(dim, 0.0);
    if (r > 0) {
      for (double& t : start) t = gauss(rng);
    }
    VectorMax local = nelder_mead_max(objective, start, 0.8, 1e-12, 6000);
    if (local.value > best.value) {
      best.value = local.value;
      best_theta = local.arg;
      best.q = unpack(best_theta);
    }
  }
  best.q.in_class_q = true;
  best.q.aperiodic = true;
  return best;
}

}  // namespace fscb
