#pragma once

#include <cassert>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace fscb {

// All information quantities in this library are in bits (log base 2),
// with the convention 0*log2(0) = 0.

inline double xlog2(double x) {
  return x > 0.0 ? x * std::log2(x) : 0.0;
}

// Clamps a value that should be a probability but may carry rounding dust.
// Anything outside [0,1] by more than `slack` is a logic error upstream.
inline double clamp01(double p, double slack = 1e-12) {
  if (p < -slack || p > 1.0 + slack) {
    throw std::domain_error("probability out of range: " + std::to_string(p));
  }
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

/// Binary entropy h_b(p) in bits.
inline double binary_entropy(double p) {
  p = clamp01(p);
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// Entropy of a (sub)distribution in bits. Entries must be nonnegative.
inline double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) h -= xlog2(p);
  return h;
}

inline double entropy(const std::vector<double>& probs) {
  return entropy(std::span<const double>(probs));
}

// Compensated (Kahan) accumulator. Enumeration-style sums over many tiny
// probabilities need it to meet the 1e-10 identities checked in tests.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

}  // namespace fscb
