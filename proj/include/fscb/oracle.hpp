#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "fscb/channel.hpp"
#include "fscb/dp.hpp"
#include "fscb/entropy.hpp"
#include "fscb/graph.hpp"

namespace fscb {

/// Exact N-letter information quantities, all in bits, all computed by full
/// enumeration of the joint sequence law.
struct SequenceStats {
  int n = 0;
  double mutual_info = 0.0;        // I(X^N; Y^N)
  double reverse_di = 0.0;         // sum_t I(Y^t; X_t | X^{t-1})
  double forward_lagged_di = 0.0;  // sum_t I(X^{t-1}; Y_t | Y^{t-1})
  double reward_sum = 0.0;         // sum_t I(X_t; Y_t | X^{t-1}), state known
};

/// Input law that may depend on the whole input history.
using HistoryLaw = std::function<std::vector<double>(std::span<const int>)>;

/// A Markov policy as a history-dependent law: the history determines the
/// state, the state selects the row.
inline HistoryLaw lift_policy(const Fsc& fsc, const Policy& policy) {
  validate_policy(fsc, policy);
  return [fsc, policy](std::span<const int> history) {
    int s = fsc.initial_state;
    for (int x : history) s = fsc.next[s][x];
    return policy.rows[s];
  };
}

inline HistoryLaw iid_history_law(std::vector<double> probs) {
  return [probs](std::span<const int>) { return probs; };
}

/// A reproducible, genuinely history-dependent law: every history of length
/// below `max_len` gets its own flat-Dirichlet row drawn from the seed.
inline HistoryLaw random_history_law(int num_inputs, int max_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  auto tables = std::make_shared<std::vector<std::vector<std::vector<double>>>>();
  tables->resize(max_len);
  std::size_t histories = 1;
  for (int t = 0; t < max_len; ++t) {
    (*tables)[t].resize(histories);
    for (std::size_t h = 0; h < histories; ++h) {
      std::vector<double> row(num_inputs);
      double sum = 0.0;
      for (double& v : row) {
        v = -std::log(std::max(unit(), 1e-300));  // exp(1) draws: flat Dirichlet
        sum += v;
      }
      for (double& v : row) v /= sum;
      (*tables)[t][h] = std::move(row);
    }
    histories *= num_inputs;
  }
  return [tables, num_inputs, max_len](std::span<const int> history) {
    int t = static_cast<int>(history.size());
    if (t >= max_len) {
      throw std::out_of_range("random_history_law: history longer than max_len");
    }
    std::size_t idx = 0;
    for (int x : history) idx = idx * num_inputs + x;
    return (*tables)[t][idx];
  };
}

namespace detail {

/// Flat joint law over (x^N, y^N) with big-endian digit packing, so a
/// length-a prefix is an integer division by radix^(N-a).
struct SequenceJoint {
  int n = 0;
  int nx = 0, ny = 0;
  std::vector<std::size_t> pow_x, pow_y;  // pow_x[i] = nx^i
  std::vector<double> p;                  // indexed x_idx * pow_y[n] + y_idx

  double& at(std::size_t xi, std::size_t yi) { return p[xi * pow_y[n] + yi]; }
};

inline SequenceJoint enumerate_joint(const Fsc& fsc, const HistoryLaw& law, int n) {
  SequenceJoint j;
  j.n = n;
  j.nx = fsc.num_inputs;
  j.ny = fsc.num_outputs;
  double cells = std::pow(static_cast<double>(j.nx), n) *
                 std::pow(static_cast<double>(j.ny), n);
  if (cells > 1e7) {
    throw std::invalid_argument("exact_sequence_stats: |X|^N * |Y|^N exceeds 1e7");
  }
  j.pow_x.resize(n + 1);
  j.pow_y.resize(n + 1);
  j.pow_x[0] = j.pow_y[0] = 1;
  for (int i = 1; i <= n; ++i) {
    j.pow_x[i] = j.pow_x[i - 1] * j.nx;
    j.pow_y[i] = j.pow_y[i - 1] * j.ny;
  }
  j.p.assign(j.pow_x[n] * j.pow_y[n], 0.0);

  std::vector<int> history;
  history.reserve(n);
  std::function<void(int, std::size_t, std::size_t, int, double)> walk =
      [&](int t, std::size_t xi, std::size_t yi, int s, double prob) {
        if (t == n) {
          j.at(xi, yi) += prob;
          return;
        }
        std::vector<double> row = law(history);
        if (static_cast<int>(row.size()) != j.nx) {
          throw std::invalid_argument("input law returned a row of wrong length");
        }
        for (int x = 0; x < j.nx; ++x) {
          if (row[x] <= 0.0) continue;
          history.push_back(x);
          for (int y = 0; y < j.ny; ++y) {
            double w = fsc.emission[s][x][y];
            if (w > 0.0) {
              walk(t + 1, xi * j.nx + x, yi * j.ny + y, fsc.next[s][x], prob * row[x] * w);
            }
          }
          history.pop_back();
        }
      };
  walk(0, 0, 0, fsc.initial_state, 1.0);
  return j;
}

/// H(X^a, Y^b) from the full joint; results memoized per (a,b).
struct MarginalEntropies {
  const SequenceJoint& j;
  std::map<std::pair<int, int>, double> prefix_cache;

  explicit MarginalEntropies(const SequenceJoint& joint) : j(joint) {}

  double prefix(int a, int b) {
    auto key = std::make_pair(a, b);
    auto it = prefix_cache.find(key);
    if (it != prefix_cache.end()) return it->second;
    std::vector<double> table(j.pow_x[a] * j.pow_y[b], 0.0);
    std::size_t dx = j.pow_x[j.n - a], dy = j.pow_y[j.n - b];
    for (std::size_t xi = 0; xi < j.pow_x[j.n]; ++xi) {
      std::size_t xkey = (xi / dx) * j.pow_y[b];
      const double* row = &j.p[xi * j.pow_y[j.n]];
      for (std::size_t yi = 0; yi < j.pow_y[j.n]; ++yi) {
        if (row[yi] > 0.0) table[xkey + yi / dy] += row[yi];
      }
    }
    KahanSum h;
    for (double v : table) h.add(-xlog2(v));
    prefix_cache.emplace(key, h.value());
    return h.value();
  }

  // H(X^a, Y_t): the x prefix joined with the single output at position t.
  double prefix_x_single_y(int a, int t) {
    std::vector<double> table(j.pow_x[a] * j.ny, 0.0);
    std::size_t dx = j.pow_x[j.n - a], dy = j.pow_y[j.n - t];
    for (std::size_t xi = 0; xi < j.pow_x[j.n]; ++xi) {
      std::size_t xkey = (xi / dx) * j.ny;
      const double* row = &j.p[xi * j.pow_y[j.n]];
      for (std::size_t yi = 0; yi < j.pow_y[j.n]; ++yi) {
        if (row[yi] > 0.0) table[xkey + (yi / dy) % j.ny] += row[yi];
      }
    }
    KahanSum h;
    for (double v : table) h.add(-xlog2(v));
    return h.value();
  }
};

}  // namespace detail

/// Enumerates the joint sequence law and assembles the four N-letter
/// quantities from marginal entropies. The guard keeps the table at desk
/// scale; this is the ground truth the fast paths are tested against.
inline SequenceStats exact_sequence_stats(const Fsc& fsc, const HistoryLaw& law, int n) {
  if (n < 1) throw std::invalid_argument("exact_sequence_stats: need N >= 1");
  ValidationReport rep = validate(fsc);
  if (!rep.ok()) {
    throw std::invalid_argument("exact_sequence_stats: " + rep.violations.front());
  }
  detail::SequenceJoint joint = detail::enumerate_joint(fsc, law, n);
  detail::MarginalEntropies ent(joint);

  SequenceStats stats;
  stats.n = n;
  stats.mutual_info = ent.prefix(n, 0) + ent.prefix(0, n) - ent.prefix(n, n);

  KahanSum reverse, forward, reward;
  for (int t = 1; t <= n; ++t) {
    // I(Y^t; X_t | X^{t-1}) = H(X^t) - H(X^{t-1}) - H(X^t,Y^t) + H(X^{t-1},Y^t)
    reverse.add(ent.prefix(t, 0) - ent.prefix(t - 1, 0) - ent.prefix(t, t) +
                ent.prefix(t - 1, t));
    // I(X^{t-1}; Y_t | Y^{t-1}) = H(Y^t) - H(Y^{t-1}) - H(X^{t-1},Y^t) + H(X^{t-1},Y^{t-1})
    forward.add(ent.prefix(0, t) - ent.prefix(0, t - 1) - ent.prefix(t - 1, t) +
                ent.prefix(t - 1, t - 1));
    // I(X_t; Y_t | X^{t-1}) = H(X^{t-1},Y_t) - H(X^{t-1}) - H(X^t,Y_t) + H(X^t)
    reward.add(ent.prefix_x_single_y(t - 1, t) - ent.prefix(t - 1, 0) -
               ent.prefix_x_single_y(t, t) + ent.prefix(t, 0));
  }
  stats.reverse_di = reverse.value();
  stats.forward_lagged_di = forward.value();
  stats.reward_sum = reward.value();
  return stats;
}

/// The N-step average of the per-step information terms under a Markov
/// policy, by walking every positive-probability input history. Each term
/// is the divergence form of the one-step mutual information at the state
/// the history leads to, an algebraic route independent of the DP reward.
inline double reward_rate_oracle(const Fsc& fsc, const Policy& policy, int n) {
  if (n < 1) throw std::invalid_argument("reward_rate_oracle: need N >= 1");
  validate_policy(fsc, policy);
  if (std::pow(static_cast<double>(fsc.num_inputs), n) > 1e6) {
    throw std::invalid_argument("reward_rate_oracle: |X|^N exceeds 1e6");
  }

  std::vector<double> step_info(fsc.num_states, 0.0);
  for (int s = 0; s < fsc.num_states; ++s) {
    const auto& row = policy.rows[s];
    std::vector<double> mix(fsc.num_outputs, 0.0);
    for (int x = 0; x < fsc.num_inputs; ++x) {
      if (row[x] <= 0.0) continue;
      for (int y = 0; y < fsc.num_outputs; ++y) mix[y] += row[x] * fsc.emission[s][x][y];
    }
    KahanSum info;
    for (int x = 0; x < fsc.num_inputs; ++x) {
      if (row[x] <= 0.0) continue;
      for (int y = 0; y < fsc.num_outputs; ++y) {
        double w = fsc.emission[s][x][y];
        if (w > 0.0) info.add(row[x] * w * std::log2(w / mix[y]));
      }
    }
    step_info[s] = info.value();
  }

  KahanSum total;
  std::function<void(int, int, double)> walk = [&](int t, int s, double prob) {
    if (t == n) return;
    total.add(prob * step_info[s]);
    for (int x = 0; x < fsc.num_inputs; ++x) {
      if (policy.rows[s][x] > 0.0) walk(t + 1, fsc.next[s][x], prob * policy.rows[s][x]);
    }
  };
  walk(0, fsc.initial_state, 1.0);
  return total.value() / n;
}

/// log2 of the Perron root of the constraint adjacency matrix: the
/// noiseless capacity, by a route sharing nothing with the closed forms.
inline double spectral_noiseless_capacity(const ConstraintGraph& g) {
  if (!strongly_connected(g.digraph())) {
    throw std::domain_error("spectral_noiseless_capacity: graph is reducible");
  }
  return std::log2(perron_root(g.adjacency, 1e-14));
}

struct ClassStats {
  std::vector<int> members;
  std::vector<double> stationary;
  double average_reward = 0.0;
};

struct PolicyChainStats {
  // Headline values; meaningful when the chain has a single closed class
  // reachable from the initial state, NaN otherwise.
  std::vector<double> stationary;
  double exact_average_reward = std::numeric_limits<double>::quiet_NaN();
  double mc_estimate = 0.0;
  double mc_stderr = 0.0;
  long steps = 0;
  std::uint64_t seed = 0;
  bool single_closed_class = false;
  std::vector<ClassStats> classes;  // closed classes reachable from s0
};

/// Exact stationary analysis of the policy-induced state chain plus a
/// seeded Monte Carlo average. The Monte Carlo error bar comes from batch
/// means, so the three-sigma agreement contract survives autocorrelation.
inline PolicyChainStats simulate_policy(const Fsc& fsc, const Policy& policy, long steps,
                                        std::uint64_t seed) {
  if (steps < 1) throw std::invalid_argument("simulate_policy: need steps >= 1");
  validate_policy(fsc, policy);
  PolicyChainStats out;
  out.steps = steps;
  out.seed = seed;

  auto m = policy_transition_matrix(fsc, policy);
  Digraph g(fsc.num_states);
  for (int s = 0; s < fsc.num_states; ++s)
    for (int s2 = 0; s2 < fsc.num_states; ++s2)
      if (m[s][s2] > 0.0) g.add_edge(s, s2);

  auto reach = reachable_from(g, fsc.initial_state);
  for (auto& cls : closed_classes(g)) {
    if (!reach[cls.front()]) continue;
    ClassStats cs;
    cs.members = cls;
    cs.stationary = stationary_distribution(m, cls);
    KahanSum avg;
    for (int s : cls) avg.add(cs.stationary[s] * reward(fsc, s, policy.rows[s]));
    cs.average_reward = avg.value();
    out.classes.push_back(std::move(cs));
  }
  out.single_closed_class = out.classes.size() == 1;
  if (out.single_closed_class) {
    out.stationary = out.classes.front().stationary;
    out.exact_average_reward = out.classes.front().average_reward;
  }

  std::vector<double> step_reward(fsc.num_states);
  for (int s = 0; s < fsc.num_states; ++s) step_reward[s] = reward(fsc, s, policy.rows[s]);

  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  int s = fsc.initial_state;
  const long batches = std::min<long>(100, steps);
  const long batch_size = steps / batches;
  std::vector<double> batch_mean;
  batch_mean.reserve(batches);
  for (long b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (long i = 0; i < batch_size; ++i) {
      acc += step_reward[s];
      double u = unit();
      double cum = 0.0;
      int chosen = -1;
      for (int x = 0; x < fsc.num_inputs; ++x) {
        cum += policy.rows[s][x];
        if (u < cum) {
          chosen = x;
          break;
        }
      }
      if (chosen < 0) {  // u landed in rounding dust past the last entry
        for (int x = fsc.num_inputs - 1; x >= 0; --x) {
          if (policy.rows[s][x] > 0.0) {
            chosen = x;
            break;
          }
        }
      }
      s = fsc.next[s][chosen];
    }
    batch_mean.push_back(acc / batch_size);
  }
  double mean = 0.0;
  for (double v : batch_mean) mean += v;
  mean /= batches;
  double var = 0.0;
  for (double v : batch_mean) var += (v - mean) * (v - mean);
  out.mc_estimate = mean;
  out.mc_stderr = batches > 1 ? std::sqrt(var / (batches - 1) / batches) : 0.0;
  return out;
}

/// Seeds of the randomized conservation-law corpus; fixed so every run and
/// every tool checks the same twenty channels.
inline constexpr std::array<std::uint64_t, 20> kConservationSeeds = {
    11, 23, 37, 41, 53, 67, 79, 83, 97, 101,
    113, 127, 131, 149, 163, 179, 191, 211, 223, 239};

/// Random small channel for the corpus: up to three states, binary in/out,
/// flat-Dirichlet emission rows, uniform random deterministic transitions.
inline Fsc make_random_small_fsc(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  int ns = 1 + static_cast<int>(rng() % 3);
  std::vector<std::vector<int>> next(ns, std::vector<int>(2));
  std::vector<std::vector<std::vector<double>>> emission(
      ns, std::vector<std::vector<double>>(2));
  std::vector<std::vector<char>> allowed(ns, std::vector<char>(2, 1));
  for (int s = 0; s < ns; ++s) {
    for (int x = 0; x < 2; ++x) {
      next[s][x] = static_cast<int>(rng() % ns);
      double u = unit();
      emission[s][x] = {u, 1.0 - u};
    }
  }
  return make_fsc(std::move(next), std::move(emission), std::move(allowed), 0);
}

/// Horizon used for a corpus channel; bounded so the enumeration guard
/// never trips.
inline int conservation_horizon(std::uint64_t seed) { return 3 + static_cast<int>(seed % 3); }

}  // namespace fscb
