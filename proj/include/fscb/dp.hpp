#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fscb/channel.hpp"
#include "fscb/entropy.hpp"
#include "fscb/optimize.hpp"

namespace fscb {

/// Belief over channel states. With a deterministic transition table and a
/// known initial state every reachable belief is a point mass, which is what
/// the solver exploits; the general form is kept for the push-forward API.
struct DpState {
  std::vector<double> belief;
  int point_mass_index = -1;

  bool is_point_mass() const { return point_mass_index >= 0; }
};

inline DpState point_mass_state(int s, int num_states) {
  DpState z;
  z.belief.assign(num_states, 0.0);
  z.belief[s] = 1.0;
  z.point_mass_index = s;
  return z;
}

/// One probability row over inputs per channel state; zero on forbidden
/// inputs. The free entries of these rows are the scalars the closed forms
/// call a and a_d..a_{k-1}.
struct Policy {
  std::vector<std::vector<double>> rows;  // [s][x]
};

inline void validate_policy(const Fsc& fsc, const Policy& policy, double tol = 1e-9) {
  if (static_cast<int>(policy.rows.size()) != fsc.num_states) {
    throw std::invalid_argument("policy: row count does not match state count");
  }
  for (int s = 0; s < fsc.num_states; ++s) {
    const auto& row = policy.rows[s];
    if (static_cast<int>(row.size()) != fsc.num_inputs) {
      throw std::invalid_argument("policy: row " + std::to_string(s) + " has wrong length");
    }
    double sum = 0.0;
    for (int x = 0; x < fsc.num_inputs; ++x) {
      if (row[x] < -tol) {
        throw std::invalid_argument("policy: negative mass at state " + std::to_string(s));
      }
      if (!fsc.allowed[s][x] && row[x] > tol) {
        throw std::invalid_argument("policy: mass on forbidden input at state " +
                                    std::to_string(s));
      }
      sum += row[x];
    }
    if (std::abs(sum - 1.0) > tol) {
      throw std::invalid_argument("policy: row " + std::to_string(s) + " sums to " +
                                  std::to_string(sum));
    }
  }
}

inline Policy uniform_policy(const Fsc& fsc) {
  Policy p;
  p.rows.assign(fsc.num_states, std::vector<double>(fsc.num_inputs, 0.0));
  for (int s = 0; s < fsc.num_states; ++s) {
    auto xs = fsc.allowed_inputs(s);
    for (int x : xs) p.rows[s][x] = 1.0 / xs.size();
  }
  return p;
}

/// State-chain transition matrix induced by a policy.
inline std::vector<std::vector<double>> policy_transition_matrix(const Fsc& fsc,
                                                                 const Policy& policy) {
  std::vector<std::vector<double>> m(fsc.num_states,
                                     std::vector<double>(fsc.num_states, 0.0));
  for (int s = 0; s < fsc.num_states; ++s)
    for (int x = 0; x < fsc.num_inputs; ++x)
      if (policy.rows[s][x] > 0.0) m[s][fsc.next[s][x]] += policy.rows[s][x];
  return m;
}

/// Per-step reward: the mutual information the receiver gains about the
/// current input when the previous state is s and inputs are drawn from
/// `row`, i.e. H(Y) under the output mixture minus the average H(Y|X).
inline double reward(const Fsc& fsc, int s, const std::vector<double>& row) {
  if (static_cast<int>(row.size()) != fsc.num_inputs) {
    throw std::invalid_argument("reward: row has wrong length");
  }
  std::vector<double> mix(fsc.num_outputs, 0.0);
  double cond = 0.0;
  for (int x = 0; x < fsc.num_inputs; ++x) {
    if (row[x] == 0.0) continue;
    if (!fsc.allowed[s][x] && row[x] > 1e-12) {
      throw std::invalid_argument("reward: mass on forbidden input " + std::to_string(x) +
                                  " at state " + std::to_string(s));
    }
    for (int y = 0; y < fsc.num_outputs; ++y) mix[y] += row[x] * fsc.emission[s][x][y];
    cond += row[x] * entropy(fsc.emission[s][x]);
  }
  return entropy(mix) - cond;
}

/// Pushes a belief through the deterministic transition table.
inline DpState next_dp_state(const Fsc& fsc, const DpState& z, int x) {
  if (x < 0 || x >= fsc.num_inputs) throw std::invalid_argument("next_dp_state: bad input");
  DpState out;
  out.belief.assign(fsc.num_states, 0.0);
  for (int s = 0; s < fsc.num_states; ++s) {
    if (z.belief[s] > 0.0) out.belief[fsc.next[s][x]] += z.belief[s];
  }
  out.point_mass_index = -1;
  for (int s = 0; s < fsc.num_states; ++s) {
    if (out.belief[s] > 1.0 - 1e-12) out.point_mass_index = s;
  }
  return out;
}

/// Law of the next input (the DP disturbance) given belief and policy.
inline std::vector<double> disturbance_law(const Fsc& fsc, const DpState& z,
                                           const Policy& policy) {
  std::vector<double> p(fsc.num_inputs, 0.0);
  for (int s = 0; s < fsc.num_states; ++s) {
    if (z.belief[s] == 0.0) continue;
    for (int x = 0; x < fsc.num_inputs; ++x) p[x] += z.belief[s] * policy.rows[s][x];
  }
  return p;
}

struct SolverOptions {
  double tolerance = 1e-10;
  long max_iterations = 100000;
  int grid_points = 64;
  int restarts = 8;
  std::uint64_t seed = 0;
};

struct DpSolution {
  double rho = 0.0;
  std::vector<double> h;  // relative values over states, h[initial_state] = 0
  Policy policy;
  double bellman_residual = 0.0;
  long iterations = 0;
  bool converged = false;
  double rho_lo = 0.0;  // min/max of the final Bellman-operator increments
  double rho_hi = 0.0;
  std::vector<double> span_history;
};

namespace detail {

struct InnerMax {
  std::vector<double> row;
  double value = 0.0;
};

/// Maximizes reward(s, row) + sum_x row(x) * cont[x] over rows supported on
/// the allowed inputs at s. One allowed input: nothing to choose. Two: the
/// row is a scalar in [0,1], scanned on a coarse grid then refined by
/// golden section (the refinement only wins on strict improvement, so ties
/// resolve to the smallest parameter). Three or more: capped simplex grid
/// plus softmax-reparameterized Nelder-Mead restarts.
inline InnerMax maximize_state_action(const Fsc& fsc, int s,
                                      const std::vector<double>& cont,
                                      const SolverOptions& opts) {
  const auto xs = fsc.allowed_inputs(s);
  const int m = static_cast<int>(xs.size());
  if (m == 0) throw std::domain_error("state " + std::to_string(s) + " has no allowed input");

  InnerMax out;
  out.row.assign(fsc.num_inputs, 0.0);

  if (m == 1) {
    out.row[xs[0]] = 1.0;
    out.value = reward(fsc, s, out.row) + cont[xs[0]];
    return out;
  }

  if (m == 2) {
    auto objective = [&](double a) {
      std::vector<double> row(fsc.num_inputs, 0.0);
      row[xs[0]] = 1.0 - a;
      row[xs[1]] = a;
      return reward(fsc, s, row) + (1.0 - a) * cont[xs[0]] + a * cont[xs[1]];
    };
    ScalarMax best = grid_golden_max(objective, 0.0, 1.0, opts.grid_points, 1e-10);
    out.row[xs[0]] = 1.0 - best.arg;
    out.row[xs[1]] = best.arg;
    out.value = best.value;
    return out;
  }

  auto objective = [&](const std::vector<double>& sub) {
    std::vector<double> row(fsc.num_inputs, 0.0);
    double lin = 0.0;
    for (int i = 0; i < m; ++i) {
      row[xs[i]] = sub[i];
      lin += sub[i] * cont[xs[i]];
    }
    return reward(fsc, s, row) + lin;
  };
  double cap = std::min(std::pow(33.0, m - 1), 50000.0);
  std::uint64_t seed = opts.seed + 0x9e3779b97f4a7c15ULL * (s + 1);
  VectorMax best = simplex_max(objective, m, opts.restarts, seed,
                               static_cast<std::size_t>(cap));
  for (int i = 0; i < m; ++i) out.row[xs[i]] = best.arg[i];
  out.value = best.value;
  return out;
}

}  // namespace detail

/// Per-state gaps of the average-reward optimality equation
/// rho + h(s) = max_row [ g(s,row) + sum_x row(x) h(f(s,x)) ].
inline std::vector<double> bellman_gaps(const Fsc& fsc, double rho,
                                        const std::vector<double>& h,
                                        const SolverOptions& opts = {}) {
  if (static_cast<int>(h.size()) != fsc.num_states) {
    throw std::invalid_argument("bellman_gaps: h does not match the state count");
  }
  std::vector<double> gaps(fsc.num_states, 0.0);
  std::vector<double> cont(fsc.num_inputs, 0.0);
  for (int s = 0; s < fsc.num_states; ++s) {
    for (int x = 0; x < fsc.num_inputs; ++x) cont[x] = h[fsc.next[s][x]];
    double best = detail::maximize_state_action(fsc, s, cont, opts).value;
    gaps[s] = best - rho - h[s];
  }
  return gaps;
}

/// Max absolute Bellman gap; a value below tolerance certifies (rho, h) as
/// an optimal average-reward pair and hence rho as a valid bound.
inline double bellman_residual(const Fsc& fsc, double rho, const std::vector<double>& h,
                               const SolverOptions& opts = {}) {
  double worst = 0.0;
  for (double gap : bellman_gaps(fsc, rho, h, opts)) {
    worst = std::max(worst, std::abs(gap));
  }
  return worst;
}

/// Relative value iteration on the point-mass DP states (= channel states).
/// Iterates a damped Bellman operator, T'h = tau*h + max_row[g + (1-tau)*Ph],
/// which has the same average reward as the undamped one but converges for
/// periodic chains too; the returned h is rescaled back to the undamped
/// equation. The increment span at stopping bounds the Bellman residual by
/// span/2, so the certificate below tolerance is guaranteed at convergence.
inline DpSolution solve_average_reward(const Fsc& fsc, const SolverOptions& opts = {}) {
  ValidationReport rep = validate(fsc);
  if (!rep.ok()) {
    throw std::invalid_argument("solve_average_reward: invalid channel: " +
                                rep.violations.front());
  }
  auto seen = reachable_from(fsc.state_graph(), fsc.initial_state);
  for (int s = 0; s < fsc.num_states; ++s) {
    if (!seen[s]) {
      throw std::domain_error("solve_average_reward: state " + std::to_string(s) +
                              " unreachable from the initial state");
    }
  }

  const double tau = 0.5;
  const double stop_span = std::min(1e-12, opts.tolerance);
  const int n = fsc.num_states;
  const int s0 = fsc.initial_state;

  std::vector<double> h(n, 0.0), fresh(n, 0.0), cont(fsc.num_inputs, 0.0);
  DpSolution sol;
  double lo = 0.0, hi = 0.0;

  long it = 0;
  for (; it < opts.max_iterations; ++it) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (int s = 0; s < n; ++s) {
      for (int x = 0; x < fsc.num_inputs; ++x) {
        cont[x] = (1.0 - tau) * h[fsc.next[s][x]];
      }
      double value = tau * h[s] + detail::maximize_state_action(fsc, s, cont, opts).value;
      double inc = value - h[s];
      lo = std::min(lo, inc);
      hi = std::max(hi, inc);
      fresh[s] = value;
    }
    double shift = fresh[s0];
    for (int s = 0; s < n; ++s) h[s] = fresh[s] - shift;
    sol.span_history.push_back(hi - lo);
    if (hi - lo < stop_span) {
      sol.converged = true;
      ++it;
      break;
    }
  }

  sol.iterations = it;
  sol.rho = 0.5 * (lo + hi);
  if (sol.rho < 0.0 && sol.rho > -1e-9) sol.rho = 0.0;
  sol.rho_lo = lo;
  sol.rho_hi = hi;
  sol.h.assign(n, 0.0);
  for (int s = 0; s < n; ++s) sol.h[s] = (1.0 - tau) * h[s];

  sol.policy.rows.assign(n, std::vector<double>(fsc.num_inputs, 0.0));
  for (int s = 0; s < n; ++s) {
    for (int x = 0; x < fsc.num_inputs; ++x) cont[x] = sol.h[fsc.next[s][x]];
    sol.policy.rows[s] = detail::maximize_state_action(fsc, s, cont, opts).row;
  }
  sol.bellman_residual = bellman_residual(fsc, sol.rho, sol.h, opts);
  return sol;
}

}  // namespace fscb
