#pragma once

// Shared test helpers. The reference integrator here is deliberately
// independent of the library's drivers so refined-step oracles do not share
// code with the implementation they check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace test_util {

// Plain fixed-step RK4 oracle for dy/dt = f(t, y).
inline std::vector<double> rk4_reference(std::vector<double> y,
                                         const std::function<std::vector<double>(
                                             double, const std::vector<double>&)>& f,
                                         double t_end, double dt) {
  double t = 0.0;
  const std::size_t n = y.size();
  while (t < t_end - 1e-12) {
    const double step = std::min(dt, t_end - t);
    const std::vector<double> k1 = f(t, y);
    std::vector<double> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * step * k1[i];
    const std::vector<double> k2 = f(t + 0.5 * step, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * step * k2[i];
    const std::vector<double> k3 = f(t + 0.5 * step, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * k3[i];
    const std::vector<double> k4 = f(t + step, tmp);
    for (std::size_t i = 0; i < n; ++i)
      y[i] += step / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    t += step;
  }
  return y;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace test_util
