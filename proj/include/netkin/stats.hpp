#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "netkin/common.hpp"

namespace netkin {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw ArgumentError("mean: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ArgumentError("sample_variance: needs at least two samples");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double standard_error(std::span<const double> xs) {
  return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

// One-sample Kolmogorov-Smirnov statistic against the uniform law on [0, 1].
inline double ks_statistic_uniform(std::vector<double> samples) {
  if (samples.empty()) throw ArgumentError("ks_statistic_uniform: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(hi - samples[i], samples[i] - lo));
  }
  return d;
}

// Asymptotic Kolmogorov p-value with Marsaglia's finite-n correction.
inline double ks_pvalue(double d, std::size_t n) {
  if (n == 0) throw ArgumentError("ks_pvalue: n must be positive");
  const double sn = std::sqrt(static_cast<double>(n));
  const double x = (sn + 0.12 + 0.11 / sn) * d;
  if (x <= 0.0) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) * x * x);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

// KS test of inter-event waiting times against Exp(rate) via the probability
// integral transform.
inline double ks_pvalue_exponential(std::span<const double> waits, double rate) {
  if (!(rate > 0.0)) throw ArgumentError("ks_pvalue_exponential: rate must be positive");
  std::vector<double> u;
  u.reserve(waits.size());
  for (double w : waits) u.push_back(-std::expm1(-rate * w));
  return ks_pvalue(ks_statistic_uniform(std::move(u)), waits.size());
}

}  // namespace netkin
