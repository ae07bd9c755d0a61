#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "netkin/common.hpp"

namespace netkin {

enum class TimeScheme { Euler, RK4 };

namespace detail {

struct Rk4Work {
  std::vector<double> k1, k2, k3, k4, tmp;
  void resize(std::size_t n) {
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    tmp.resize(n);
  }
};

// Classical RK4 step for dy/dt = f(t, y); f(t, y, dydt).
template <class Rhs>
void rk4_step(double t, double dt, std::vector<double>& y, Rk4Work& w, Rhs&& f) {
  const std::size_t n = y.size();
  w.resize(n);
  f(t, y, w.k1);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + 0.5 * dt * w.k1[i];
  f(t + 0.5 * dt, w.tmp, w.k2);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + 0.5 * dt * w.k2[i];
  f(t + 0.5 * dt, w.tmp, w.k3);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + dt * w.k3[i];
  f(t + dt, w.tmp, w.k4);
  const double c = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i)
    y[i] += c * (w.k1[i] + 2.0 * (w.k2[i] + w.k3[i]) + w.k4[i]);
}

template <class Rhs>
void euler_step(double t, double dt, std::vector<double>& y, Rk4Work& w, Rhs&& f) {
  const std::size_t n = y.size();
  w.resize(n);
  f(t, y, w.k1);
  for (std::size_t i = 0; i < n; ++i) y[i] += dt * w.k1[i];
}

inline void check_finite(const std::vector<double>& y, double t) {
  for (double x : y)
    if (!std::isfinite(x) || std::abs(x) > 1e12)
      throw NumericalError("integration blew up at t = " + std::to_string(t));
}

inline void validate_stops(std::span<const double> stops, double t_end) {
  double prev = -1.0;
  for (double s : stops) {
    if (!(s >= 0.0) || s > t_end + 1e-12)
      throw ArgumentError("snapshot times must lie in [0, t_end]");
    if (!(s > prev)) throw ArgumentError("snapshot times must be strictly increasing");
    prev = s;
  }
}

// Drive y over [0, t_end] with fixed step dt (shortened to land exactly on
// each stop). observe(t, y) fires at every stop; after_step(t, y) runs after
// each accepted step and may repair y (projections, guards).
template <class Rhs, class Observe, class AfterStep>
void integrate_fixed(double t_end, double dt, TimeScheme scheme, std::vector<double>& y, Rhs&& f,
                     std::span<const double> stops, Observe&& observe, AfterStep&& after_step) {
  if (!(dt > 0.0)) throw ArgumentError("integration step dt must be positive");
  if (!(t_end >= 0.0)) throw ArgumentError("t_end must be nonnegative");
  validate_stops(stops, t_end);

  Rk4Work work;
  double t = 0.0;
  std::size_t next_stop = 0;
  if (next_stop < stops.size() && stops[next_stop] == 0.0) {
    observe(0.0, y);
    ++next_stop;
  }
  const double tiny = 1e-12 * std::max(1.0, t_end);
  while (t < t_end - tiny) {
    double target = t_end;
    if (next_stop < stops.size()) target = std::min(target, stops[next_stop]);
    double step = std::min(dt, target - t);
    if (step <= 0.0) step = target - t;
    if (scheme == TimeScheme::RK4)
      rk4_step(t, step, y, work, f);
    else
      euler_step(t, step, y, work, f);
    t += step;
    check_finite(y, t);
    after_step(t, y);
    if (next_stop < stops.size() && t >= stops[next_stop] - tiny) {
      observe(stops[next_stop], y);
      ++next_stop;
    }
  }
  while (next_stop < stops.size()) {
    observe(stops[next_stop], y);
    ++next_stop;
  }
}

}  // namespace detail
}  // namespace netkin
