#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <span>
#include <vector>

#include "netkin/common.hpp"

namespace netkin {

inline constexpr double kSimplexSumTol = 1e-12;

namespace detail {

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool in_simplex(std::span<const double> v, double tol = kSimplexSumTol) {
  if (v.empty()) return false;
  for (double x : v)
    if (!(x >= 0.0)) return false;
  return std::abs(sum(v) - 1.0) <= tol;
}

// Clamp negatives at zero and renormalize to sum one. Inputs already in the
// simplex (within tol) pass through untouched, which makes the repair both an
// identity on valid states and exactly idempotent.
inline void project_simplex_inplace(std::span<double> v, double tol = kSimplexSumTol) {
  if (v.empty() || !all_finite(v))
    throw DegenerateStateError("project_simplex: non-finite or empty input");
  bool clean = true;
  for (double x : v)
    if (x < 0.0) clean = false;
  double s = sum(v);
  if (clean && std::abs(s - 1.0) <= tol) return;
  if (!clean) {
    s = 0.0;
    for (double& x : v) {
      if (x < 0.0) x = 0.0;
      s += x;
    }
  }
  if (s <= 0.0) throw DegenerateStateError("project_simplex: no positive mass");
  for (double& x : v) x /= s;
}

// Row-wise simplex projection for site-major field data with a drift guard:
// deviations beyond `guard` indicate a genuine integration failure rather
// than rounding.
inline void project_field_rows(std::vector<double>& y, std::size_t dim, double guard, double t) {
  for (std::size_t k = 0; k * dim < y.size(); ++k) {
    std::span<double> row(y.data() + k * dim, dim);
    double s = 0.0;
    for (double x : row) {
      if (x < -guard)
        throw NumericalError("state left the simplex beyond tolerance at t = " + std::to_string(t));
      s += x;
    }
    if (std::abs(s - 1.0) > guard)
      throw NumericalError("state sum drifted beyond tolerance at t = " + std::to_string(t));
    project_simplex_inplace(row, 0.0);
  }
}

}  // namespace detail

// A point of the probability simplex K: componentwise nonnegative, sums to one.
class SimplexVector {
 public:
  explicit SimplexVector(std::vector<double> components) : c_(std::move(components)) {
    if (c_.empty()) throw ArgumentError("SimplexVector: empty");
    if (!detail::in_simplex(c_))
      throw ArgumentError("SimplexVector: components must be nonnegative and sum to 1");
  }

  static SimplexVector uniform(std::size_t m) {
    if (m == 0) throw ArgumentError("SimplexVector: dimension must be positive");
    return SimplexVector(std::vector<double>(m, 1.0 / static_cast<double>(m)));
  }

  static SimplexVector vertex(std::size_t m, std::size_t i) {
    if (i >= m) throw ArgumentError("SimplexVector: vertex index out of range");
    std::vector<double> c(m, 0.0);
    c[i] = 1.0;
    return SimplexVector(std::move(c));
  }

  std::size_t size() const { return c_.size(); }
  double operator[](std::size_t i) const { return c_[i]; }
  const std::vector<double>& components() const { return c_; }
  std::span<const double> span() const { return c_; }

 private:
  std::vector<double> c_;
};

// Repair floating-point drift: clamp negatives, renormalize. Identity on
// valid simplex vectors; idempotent.
inline SimplexVector project_simplex(std::span<const double> raw) {
  std::vector<double> v(raw.begin(), raw.end());
  detail::project_simplex_inplace(v);
  return SimplexVector(std::move(v));
}

inline SimplexVector project_simplex(const std::vector<double>& raw) {
  return project_simplex(std::span<const double>(raw));
}

}  // namespace netkin
