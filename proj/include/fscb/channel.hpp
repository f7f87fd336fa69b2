#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fscb/entropy.hpp"
#include "fscb/graph.hpp"

namespace fscb {

/// An input-driven finite-state channel: the state evolves deterministically
/// as s' = next[s][x], and the output is drawn from emission[s][x][.].
/// Inputs can be disallowed at a state via the `allowed` mask; the transition
/// and emission tables stay total so the mask is the single source of truth
/// for which actions a policy may use.
struct Fsc {
  int num_states = 0;
  int num_inputs = 0;
  int num_outputs = 0;
  std::vector<std::vector<int>> next;                       // [s][x] -> s'
  std::vector<std::vector<std::vector<double>>> emission;   // [s][x][y]
  std::vector<std::vector<char>> allowed;                   // [s][x]
  int initial_state = 0;

  // Display names, used by the file formats; defaulted to decimal indices.
  std::vector<std::string> state_names;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;

  bool is_allowed(int s, int x) const { return allowed[s][x] != 0; }

  std::vector<int> allowed_inputs(int s) const {
    std::vector<int> xs;
    for (int x = 0; x < num_inputs; ++x)
      if (allowed[s][x]) xs.push_back(x);
    return xs;
  }

  /// Digraph on states with an edge s -> next[s][x] for each allowed x.
  Digraph state_graph() const {
    Digraph g(num_states);
    for (int s = 0; s < num_states; ++s)
      for (int x = 0; x < num_inputs; ++x)
        if (allowed[s][x]) g.add_edge(s, next[s][x]);
    return g;
  }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const {
    std::string out;
    for (const auto& v : violations) {
      out += v;
      out += '\n';
    }
    return out;
  }
};

namespace detail {
inline std::vector<std::string> default_names(const std::string& prefix, int n) {
  std::vector<std::string> names(n);
  for (int i = 0; i < n; ++i) names[i] = prefix.empty() ? std::to_string(i) : prefix + std::to_string(i);
  return names;
}
}  // namespace detail

/// Checks every structural invariant and returns the full list of
/// violations instead of stopping at the first one.
inline ValidationReport validate(const Fsc& fsc) {
  ValidationReport rep;
  auto fail = [&](std::string msg) { rep.violations.push_back(std::move(msg)); };

  if (fsc.num_states < 1) fail("state set is empty");
  if (fsc.num_inputs < 1) fail("input alphabet is empty");
  if (fsc.num_outputs < 1) fail("output alphabet is empty");
  if (!rep.ok()) return rep;

  auto state_name = [&](int s) {
    return s >= 0 && s < static_cast<int>(fsc.state_names.size())
               ? fsc.state_names[s]
               : std::to_string(s);
  };
  auto input_name = [&](int x) {
    return x >= 0 && x < static_cast<int>(fsc.input_names.size())
               ? fsc.input_names[x]
               : std::to_string(x);
  };

  if (static_cast<int>(fsc.next.size()) != fsc.num_states ||
      static_cast<int>(fsc.emission.size()) != fsc.num_states ||
      static_cast<int>(fsc.allowed.size()) != fsc.num_states) {
    fail("table sizes do not match the state count");
    return rep;
  }
  for (int s = 0; s < fsc.num_states; ++s) {
    if (static_cast<int>(fsc.next[s].size()) != fsc.num_inputs ||
        static_cast<int>(fsc.emission[s].size()) != fsc.num_inputs ||
        static_cast<int>(fsc.allowed[s].size()) != fsc.num_inputs) {
      fail("tables at state " + state_name(s) + " do not match the input count");
      return rep;
    }
  }

  for (int s = 0; s < fsc.num_states; ++s) {
    bool any_allowed = false;
    for (int x = 0; x < fsc.num_inputs; ++x) {
      if (fsc.next[s][x] < 0 || fsc.next[s][x] >= fsc.num_states) {
        fail("next_state missing or out of range at (" + state_name(s) + "," +
             input_name(x) + ")");
      }
      const auto& row = fsc.emission[s][x];
      if (static_cast<int>(row.size()) != fsc.num_outputs) {
        fail("emission row at (" + state_name(s) + "," + input_name(x) +
             ") has wrong length");
        continue;
      }
      double sum = 0.0;
      bool in_range = true;
      for (double p : row) {
        if (p < -1e-12 || p > 1.0 + 1e-12) in_range = false;
        sum += p;
      }
      if (!in_range) {
        fail("emission probability out of [0,1] at (" + state_name(s) + "," +
             input_name(x) + ")");
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        fail("emission row at (" + state_name(s) + "," + input_name(x) +
             ") sums to " + std::to_string(sum));
      }
      if (fsc.allowed[s][x]) any_allowed = true;
    }
    if (!any_allowed) fail("state " + state_name(s) + " has no allowed input");
  }
  if (fsc.initial_state < 0 || fsc.initial_state >= fsc.num_states) {
    fail("initial_state out of range");
  }
  return rep;
}

/// Assembles an Fsc and rejects structural violations immediately; use
/// validate() to obtain the full report without throwing.
inline Fsc make_fsc(std::vector<std::vector<int>> next,
                    std::vector<std::vector<std::vector<double>>> emission,
                    std::vector<std::vector<char>> allowed, int initial_state) {
  Fsc fsc;
  fsc.num_states = static_cast<int>(next.size());
  fsc.num_inputs = fsc.num_states > 0 ? static_cast<int>(next[0].size()) : 0;
  fsc.num_outputs = (fsc.num_states > 0 && !emission.empty() && !emission[0].empty())
                        ? static_cast<int>(emission[0][0].size())
                        : 0;
  fsc.next = std::move(next);
  fsc.emission = std::move(emission);
  fsc.allowed = std::move(allowed);
  fsc.initial_state = initial_state;
  fsc.state_names = detail::default_names("", fsc.num_states);
  fsc.input_names = detail::default_names("", fsc.num_inputs);
  fsc.output_names = detail::default_names("", fsc.num_outputs);
  ValidationReport rep = validate(fsc);
  if (!rep.ok()) {
    throw std::invalid_argument("make_fsc: " + rep.violations.front());
  }
  return fsc;
}

/// Runlength constraint parameters: runs of 0s between successive 1s must
/// have length in [d, k]; k may be unbounded.
struct RllSpec {
  static constexpr int kInfinity = std::numeric_limits<int>::max();

  int d = 0;
  int k = kInfinity;

  bool k_infinite() const { return k == kInfinity; }
  bool valid() const { return d >= 0 && d < k; }

  // States track the current run of 0s: 0..d when k is unbounded (the count
  // saturates at d), 0..k otherwise.
  int num_states() const { return k_infinite() ? d + 1 : k + 1; }

  std::string k_string() const { return k_infinite() ? "inf" : std::to_string(k); }

  static int parse_k(const std::string& text) {
    if (text == "inf" || text == "INF" || text == "Inf") return kInfinity;
    size_t pos = 0;
    int v = std::stoi(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("bad k value: " + text);
    return v;
  }
};

/// Memoryless noise applied on top of the constraint.
struct DmcKind {
  enum Family { kBsc, kBec };
  Family family = kBsc;
  double param = 0.0;

  static DmcKind bsc(double p) { return {kBsc, p}; }
  static DmcKind bec(double eps) { return {kBec, eps}; }
};

/// Builds the runlength-constrained DMC: the state counts the current run
/// of 0s; x=1 is allowed once the run reached d, x=0 is allowed while the
/// run is below k. Forbidden inputs stay in the tables but are masked out.
inline Fsc make_rll_dmc(const RllSpec& spec, const DmcKind& dmc) {
  if (!spec.valid()) throw std::invalid_argument("make_rll_dmc: need 0 <= d < k");
  if (dmc.param < 0.0 || dmc.param > 1.0) {
    throw std::invalid_argument("make_rll_dmc: channel parameter outside [0,1]");
  }

  const int n = spec.num_states();
  const int cap = spec.k_infinite() ? spec.d : spec.k;
  std::vector<std::vector<int>> next(n, std::vector<int>(2));
  std::vector<std::vector<char>> allowed(n, std::vector<char>(2));
  for (int s = 0; s < n; ++s) {
    next[s][0] = std::min(s + 1, cap);
    next[s][1] = 0;
    allowed[s][0] = spec.k_infinite() || s < spec.k;
    allowed[s][1] = s >= spec.d;
  }

  std::vector<std::vector<double>> law;  // [x][y], identical across states
  if (dmc.family == DmcKind::kBsc) {
    double p = dmc.param;
    law = {{1.0 - p, p}, {p, 1.0 - p}};
  } else {
    double e = dmc.param;
    law = {{1.0 - e, 0.0, e}, {0.0, 1.0 - e, e}};
  }
  std::vector<std::vector<std::vector<double>>> emission(
      n, std::vector<std::vector<double>>(2));
  for (int s = 0; s < n; ++s)
    for (int x = 0; x < 2; ++x) emission[s][x] = law[x];

  Fsc fsc = make_fsc(std::move(next), std::move(emission), std::move(allowed), 0);
  if (dmc.family == DmcKind::kBec) fsc.output_names = {"0", "1", "e"};
  return fsc;
}

/// The constraint automaton itself: labeled edges plus the adjacency
/// count matrix whose spectral radius gives the noiseless capacity.
struct ConstraintGraph {
  int num_vertices = 0;
  struct Edge {
    int from;
    int label;
    int to;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<double>> adjacency;

  Digraph digraph() const {
    Digraph g(num_vertices);
    for (const auto& e : edges) g.add_edge(e.from, e.to);
    return g;
  }
};

inline ConstraintGraph constraint_graph(const RllSpec& spec) {
  if (!spec.valid()) throw std::invalid_argument("constraint_graph: need 0 <= d < k");
  Fsc fsc = make_rll_dmc(spec, DmcKind::bsc(0.0));
  ConstraintGraph g;
  g.num_vertices = fsc.num_states;
  g.adjacency.assign(g.num_vertices, std::vector<double>(g.num_vertices, 0.0));
  for (int s = 0; s < fsc.num_states; ++s) {
    for (int x = 0; x < fsc.num_inputs; ++x) {
      if (!fsc.allowed[s][x]) continue;
      g.edges.push_back({s, x, fsc.next[s][x]});
      g.adjacency[s][fsc.next[s][x]] += 1.0;
    }
  }
  return g;
}

}  // namespace fscb
