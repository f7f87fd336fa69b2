#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fscb/channel.hpp"
#include "fscb/entropy.hpp"
#include "fscb/optimize.hpp"

namespace fscb {

/// Maximizer of a closed-form objective: a single scalar for unbounded-run
/// constraints, one scalar per free state (a_d..a_{k-1}) otherwise.
struct ClosedFormParams {
  double a = 0.0;
  std::vector<double> a_vec;
};

struct BoundResult {
  enum Family { kBscDinf, kBscDk, kBecDinf, kBecDk, kNoiseless };
  double value = 0.0;
  ClosedFormParams argmax;
  Family family = kNoiseless;
};

namespace detail {

inline void require_prob(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
  }
}

// Crossover probability of the output when the input bias is a: the chance
// that input 1 mixed with noise p produces output 1 is a*(1-p) + (1-a)*p,
// whose entropy equals h_b(a*p + (1-a)*(1-p)) by symmetry.
inline double mix_gain(double a, double p) {
  return binary_entropy(a * p + (1.0 - a) * (1.0 - p)) - binary_entropy(p);
}

/// The bounded-run ratio objective:
///   sum_i mix_gain(a_i, p) * prod_{j<i} (1-a_j)
///   over  d + 1 + sum_i prod_{j<=i} (1-a_j),
/// indices running over the free states d..k-1; empty products are 1.
inline double bounded_run_ratio(int d, const std::vector<double>& a, double p) {
  double num = 0.0, den = static_cast<double>(d) + 1.0;
  double prefix = 1.0;  // prod_{j=d}^{i-1} (1 - a_j)
  for (double ai : a) {
    num += mix_gain(ai, p) * prefix;
    prefix *= 1.0 - ai;
    den += prefix;
  }
  return num / den;
}

/// Evaluates the optimality system of the bounded-run bound at a trial rate
/// rho. Sweeping the per-state maximizations backward from the forced state
/// yields relative values whose mismatch against the forced d-step prefix,
///   G(rho) = delta_d(rho) - d*rho,
/// is strictly decreasing in rho and vanishes exactly at the optimum, so the
/// bound is a bisection root. Also reports the maximizing a per free state.
struct BoundedRunSweep {
  double gap = 0.0;
  std::vector<double> argmax;
};

inline BoundedRunSweep bounded_run_sweep(int d, int k, double p, double rho) {
  BoundedRunSweep out;
  out.argmax.assign(k - d, 0.0);
  double delta = -rho;  // relative value of the forced run-limit state
  for (int i = k - 1; i >= d; --i) {
    double carry = delta;
    auto objective = [&](double a) { return mix_gain(a, p) + (1.0 - a) * carry; };
    ScalarMax best = grid_golden_max(objective, 0.0, 1.0, 65, 1e-12);
    out.argmax[i - d] = best.arg;
    delta = best.value - rho;
  }
  out.gap = delta - d * rho;
  return out;
}

}  // namespace detail

/// Unbounded-run BSC bound: max over the bias a at the free state of
/// (h_b(ap+(1-a)(1-p)) - h_b(p)) / (a*d + 1).
inline BoundResult bsc_dinf_bound(int d, double p) {
  if (d < 0) throw std::invalid_argument("bsc_dinf_bound: d must be nonnegative");
  detail::require_prob(p, "p");
  auto objective = [&](double a) { return detail::mix_gain(a, p) / (a * d + 1.0); };
  ScalarMax best = grid_golden_max(objective, 0.0, 1.0, 256, 1e-10);
  BoundResult r;
  r.family = BoundResult::kBscDinf;
  r.value = best.value;
  r.argmax.a = best.arg;
  return r;
}

/// Bounded-run BSC bound: maximum of the ratio objective over
/// (a_d,...,a_{k-1}) in [0,1]^{k-d}. Primary evaluation is the bisection on
/// the optimality system above; a sigmoid-reparameterized Nelder-Mead
/// multistart on the literal ratio polishes and cross-checks it, and the
/// better of the two is returned.
inline BoundResult bsc_dk_bound(int d, int k, double p) {
  if (d < 0 || k <= d) throw std::invalid_argument("bsc_dk_bound: need 0 <= d < k < inf");
  detail::require_prob(p, "p");

  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-14) {
    double mid = 0.5 * (lo + hi);
    if (detail::bounded_run_sweep(d, k, p, mid).gap >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double rho = 0.5 * (lo + hi);
  std::vector<double> a = detail::bounded_run_sweep(d, k, p, rho).argmax;
  double value = detail::bounded_run_ratio(d, a, p);

  auto sigmoid = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
  auto embed = [](double v) {
    v = std::clamp(v, 1e-12, 1.0 - 1e-12);
    return std::log(v / (1.0 - v));
  };
  auto ratio_of = [&](const std::vector<double>& t) {
    std::vector<double> cand(t.size());
    for (size_t i = 0; i < t.size(); ++i) cand[i] = sigmoid(t[i]);
    return detail::bounded_run_ratio(d, cand, p);
  };
  std::vector<double> base(a.size());
  for (size_t i = 0; i < a.size(); ++i) base[i] = embed(a[i]);
  std::mt19937_64 rng(0xC10);
  std::normal_distribution<double> gauss(0.0, 0.7);
  for (int attempt = 0; attempt < 5; ++attempt) {
    std::vector<double> start = base;
    if (attempt > 0) {
      for (double& t : start) t += gauss(rng);
    }
    VectorMax polished = nelder_mead_max(ratio_of, start, 0.25);
    if (polished.value > value) {
      value = polished.value;
      for (size_t i = 0; i < a.size(); ++i) a[i] = sigmoid(polished.arg[i]);
    }
  }

  BoundResult r;
  r.family = BoundResult::kBscDk;
  r.value = value;
  r.argmax.a_vec = std::move(a);
  return r;
}

/// Noiseless runlength capacity from the same maximizations at p = 0, where
/// the gain term reduces to h_b(a). Cross-checked in tests against the
/// spectral radius of the constraint graph.
inline BoundResult noiseless_capacity(const RllSpec& spec) {
  if (!spec.valid()) throw std::invalid_argument("noiseless_capacity: need 0 <= d < k");
  BoundResult r = spec.k_infinite()
                      ? [&] {
                          auto objective = [&](double a) {
                            return binary_entropy(a) / (a * spec.d + 1.0);
                          };
                          ScalarMax best = grid_golden_max(objective, 0.0, 1.0, 256, 1e-10);
                          BoundResult out;
                          out.value = best.value;
                          out.argmax.a = best.arg;
                          return out;
                        }()
                      : bsc_dk_bound(spec.d, spec.k, 0.0);
  r.family = BoundResult::kNoiseless;
  return r;
}

/// Erasure bound: the noiseless capacity scaled by the survival rate.
inline BoundResult bec_bound(const RllSpec& spec, double eps) {
  detail::require_prob(eps, "eps");
  BoundResult r = noiseless_capacity(spec);
  r.value *= 1.0 - eps;
  r.family = spec.k_infinite() ? BoundResult::kBecDinf : BoundResult::kBecDk;
  return r;
}

}  // namespace fscb
