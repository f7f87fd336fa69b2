#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace fscb {

struct ScalarMax {
  double arg = 0.0;
  double value = 0.0;
};

/// Golden-section search for a maximum of f on [lo, hi], run until the
/// bracket is narrower than `tol`. Exact for functions unimodal on the
/// bracket; callers feed it brackets found by a coarse grid scan.
template <typename F>
ScalarMax golden_section_max(F&& f, double lo, double hi, double tol) {
  static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  double mid = 0.5 * (a + b);
  return {mid, f(mid)};
}

/// Maximize f over [lo, hi]: scan an n-point uniform grid keeping the first
/// (leftmost) maximizer, then refine with golden-section inside the two
/// neighbouring cells. The refined point is returned only if it actually
/// improves on the grid value, so ties resolve to the smallest argument.
template <typename F>
ScalarMax grid_golden_max(F&& f, double lo, double hi, int grid_points,
                          double tol) {
  if (grid_points < 2) throw std::invalid_argument("grid_golden_max: grid too small");
  int best = 0;
  double best_val = f(lo);
  for (int i = 1; i < grid_points; ++i) {
    double x = lo + (hi - lo) * i / (grid_points - 1);
    double v = f(x);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double step = (hi - lo) / (grid_points - 1);
  double a = std::max(lo, lo + (best - 1) * step);
  double b = std::min(hi, lo + (best + 1) * step);
  ScalarMax refined = golden_section_max(f, a, b, tol);
  if (refined.value > best_val) return refined;
  return {lo + best * step, best_val};
}

/// All compositions of `resolution` into `dim` nonnegative parts, scaled to
/// points of the probability simplex. Enumerated in lexicographic order.
inline std::vector<std::vector<double>> simplex_grid(int dim, int resolution) {
  if (dim < 1) throw std::invalid_argument("simplex_grid: dim must be positive");
  std::vector<std::vector<double>> points;
  std::vector<int> counts(dim, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == dim - 1) {
      counts[pos] = left;
      std::vector<double> p(dim);
      for (int i = 0; i < dim; ++i) p[i] = static_cast<double>(counts[i]) / resolution;
      points.push_back(std::move(p));
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, resolution);
  return points;
}

/// Softmax onto the probability simplex; the standard smooth surjection
/// used to run unconstrained searches over distributions.
inline std::vector<double> softmax(const std::vector<double>& logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

/// Inverse of softmax up to an additive constant, safe at the boundary.
inline std::vector<double> logit_embed(const std::vector<double>& probs) {
  std::vector<double> t(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) {
    t[i] = std::log(std::max(probs[i], 1e-16));
  }
  return t;
}

struct VectorMax {
  std::vector<double> arg;
  double value = 0.0;
};

/// Nelder-Mead ascent on an unconstrained objective. Compact textbook
/// variant (reflect / expand / contract / shrink); terminates when both the
/// simplex diameter and the value spread fall below `tol` or after
/// `max_iters` proposals.
template <typename F>
VectorMax nelder_mead_max(F&& f, const std::vector<double>& start, double step,
                          double tol = 1e-12, int max_iters = 4000) {
  const int n = static_cast<int>(start.size());
  if (n == 0) return {start, f(start)};
  std::vector<std::vector<double>> xs(n + 1, start);
  std::vector<double> fs(n + 1);
  for (int i = 0; i < n; ++i) xs[i + 1][i] += step;
  for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);

  auto order = [&]() {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] > fs[b]; });
    std::vector<std::vector<double>> xs2(n + 1);
    std::vector<double> fs2(n + 1);
    for (int i = 0; i <= n; ++i) {
      xs2[i] = xs[idx[i]];
      fs2[i] = fs[idx[i]];
    }
    xs = std::move(xs2);
    fs = std::move(fs2);
  };

  for (int it = 0; it < max_iters; ++it) {
    order();
    double diam = 0.0;
    for (int i = 1; i <= n; ++i)
      for (int j = 0; j < n; ++j) diam = std::max(diam, std::abs(xs[i][j] - xs[0][j]));
    if (diam < tol && fs[0] - fs[n] < tol) break;

    std::vector<double> centroid(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) centroid[j] += xs[i][j] / n;

    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (int j = 0; j < n; ++j) p[j] = centroid[j] + coef * (xs[n][j] - centroid[j]);
      return p;
    };

    std::vector<double> xr = blend(-1.0);
    double fr = f(xr);
    if (fr > fs[0]) {
      std::vector<double> xe = blend(-2.0);
      double fe = f(xe);
      if (fe > fr) {
        xs[n] = std::move(xe);
        fs[n] = fe;
      } else {
        xs[n] = std::move(xr);
        fs[n] = fr;
      }
    } else if (fr > fs[n - 1]) {
      xs[n] = std::move(xr);
      fs[n] = fr;
    } else {
      std::vector<double> xc = blend(fr > fs[n] ? -0.5 : 0.5);
      double fc = f(xc);
      if (fc > std::max(fr, fs[n])) {
        xs[n] = std::move(xc);
        fs[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          for (int j = 0; j < n; ++j) xs[i][j] = 0.5 * (xs[i][j] + xs[0][j]);
          fs[i] = f(xs[i]);
        }
      }
    }
  }
  order();
  return {xs[0], fs[0]};
}

/// Maximize an objective over the probability simplex: capped-resolution
/// grid scan, then softmax-reparameterized Nelder-Mead restarted from the
/// best grid point and `restarts` seeded perturbations of it.
template <typename F>
VectorMax simplex_max(F&& f, int dim, int restarts, std::uint64_t seed,
                      std::size_t grid_cap = 100000) {
  if (dim == 1) return {{1.0}, f(std::vector<double>{1.0})};

  int resolution = 4;
  auto grid_size = [&](int r) {
    double n = 1.0;
    for (int i = 1; i <= dim - 1; ++i) n *= static_cast<double>(r + i) / i;
    return n;
  };
  while (grid_size(resolution + 1) <= static_cast<double>(grid_cap)) ++resolution;

  VectorMax best;
  best.value = -std::numeric_limits<double>::infinity();
  for (auto& p : simplex_grid(dim, resolution)) {
    double v = f(p);
    if (v > best.value) best = {p, v};
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  std::vector<double> base = logit_embed(best.arg);
  auto objective = [&](const std::vector<double>& logits) { return f(softmax(logits)); };
  for (int r = 0; r <= restarts; ++r) {
    std::vector<double> start = base;
    if (r > 0) {
      for (double& t : start) t += gauss(rng);
    }
    VectorMax local = nelder_mead_max(objective, start, 0.5);
    if (local.value > best.value) best = {softmax(local.arg), local.value};
  }
  return best;
}

}  // namespace fscb
