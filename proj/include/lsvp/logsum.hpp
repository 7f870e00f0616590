#pragma once

// Fixed-order reductions in the log domain. Every sum in the library goes
// through pairwise_sum so results do not depend on how work is scheduled.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace lsvp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// Pairwise (cascade) summation with a fixed split: blocks of 8 summed
// left-to-right, halves combined recursively.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// log(sum_i exp(a_i)); -inf when every term is -inf, +inf when any term is.
// `scratch` is reused to avoid allocation in hot loops.
inline double logsumexp(std::span<const double> a, std::vector<double>& scratch) {
  double m = kNegInf;
  for (double x : a) m = std::max(m, x);
  if (m == kNegInf || m == kPosInf) return m;
  scratch.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) scratch[i] = std::exp(a[i] - m);
  return m + std::log(pairwise_sum(scratch));
}

inline double logsumexp(std::span<const double> a) {
  std::vector<double> scratch;
  return logsumexp(a, scratch);
}

// log(exp(a) + exp(b)).
inline double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a == kPosInf || b == kPosInf) return kPosInf;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log(exp(a) - exp(b)) for a >= b; -inf when equal.
inline double logsubexp(double a, double b) {
  if (b == kNegInf) return a;
  if (b >= a) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

}  // namespace lsvp
