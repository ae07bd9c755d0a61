#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netkin/common.hpp"
#include "netkin/field.hpp"
#include "netkin/integrate.hpp"
#include "netkin/kernel.hpp"
#include "netkin/law.hpp"
#include "netkin/simplex.hpp"
#include "netkin/trajectory.hpp"

namespace netkin {

// Rescaled social-construction state: v the normalized representation weights,
// s the rescaled interaction count. s advances by h on every passive update.
struct NormState {
  SimplexVector v;
  double s = 1.0;

  NormState(SimplexVector v_, double s_) : v(std::move(v_)), s(s_) {
    if (!(s > 0.0)) throw ArgumentError("NormState: s must be positive");
  }
};

namespace detail {

inline void argmax_set(std::span<const double> v, std::vector<std::size_t>& out) {
  out.clear();
  double best = v[0];
  for (double x : v) best = std::max(best, x);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == best) out.push_back(i);
}

// Tie-averaged concentrated choice profile: uniform on the argmax set.
inline void argmax_profile(std::span<const double> v, std::span<double> out) {
  thread_local std::vector<std::size_t> ties;
  argmax_set(v, ties);
  const double p = 1.0 / static_cast<double>(ties.size());
  for (double& x : out) x = 0.0;
  for (std::size_t i : ties) out[i] = p;
}

}  // namespace detail

// Index of the highest weight; ties resolved uniformly at random.
inline std::size_t argmax_policy(const SimplexVector& v, Rng& rng) {
  thread_local std::vector<std::size_t> ties;
  detail::argmax_set(v.span(), ties);
  return ties.size() == 1 ? ties.front() : ties[rng.uniform_index(ties.size())];
}

// Deterministic variant: the lowest index attaining the maximum.
inline std::size_t argmax_policy_deterministic(const SimplexVector& v) {
  thread_local std::vector<std::size_t> ties;
  detail::argmax_set(v.span(), ties);
  return ties.front();
}

// Weight update after observing action i:
// v' = s/(s+h) v + h/(s+h) e_i, s' = s + h. v' stays in K exactly.
inline NormState norms_collision(const NormState& state, std::size_t action, double h) {
  if (action >= state.v.size()) throw ArgumentError("norms_collision: action index out of range");
  if (!(h > 0.0)) throw ArgumentError("norms_collision: h must be positive");
  const double keep = state.s / (state.s + h);
  const double add = h / (state.s + h);
  std::vector<double> out(state.v.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = keep * state.v[j];
  out[action] += add;
  return NormState(SimplexVector(std::move(out)), state.s + h);
}

struct NormsParams {
  std::size_t m = 4;    // number of representations
  double h = 0.01;      // increment 1/J
  Kernel network;       // dense nonnegative node weights
  Field rho;            // per-node densities
  std::vector<double> s0;  // initial s per node

  void validate() const {
    if (m < 1) throw ArgumentError("NormsParams: m must be positive");
    if (!(h > 0.0)) throw ArgumentError("NormsParams: h must be positive");
    if (network.space().is_grid())
      throw ArgumentError("NormsParams: the norms model runs on a network site space");
    if (rho.empty() || rho.dim() != 1 || !rho.nonnegative())
      throw ArgumentError("NormsParams: rho must be a nonnegative scalar field");
    require_same_space(network.space(), rho.space(), "NormsParams");
    if (s0.size() != network.space().size())
      throw DimensionError("NormsParams: s0 must give one value per node");
    for (double s : s0)
      if (!(s > 0.0)) throw ArgumentError("NormsParams: s0 entries must be positive");
  }
};

// Extended-state (v, s) law: the active agent plays its argmax representation
// i (uniform tie-break); the passive state jumps by
// b = (h/(s+h) (e_i - v), h), a = 0. Mean oracles use the tie-averaged
// profile so the drift is single-valued.
class NormsLaw final : public InteractionLaw {
 public:
  NormsLaw(std::size_t m, double h) : m_(m), h_(h) {
    if (m < 1) throw ArgumentError("NormsLaw: m must be positive");
    if (!(h > 0.0)) throw ArgumentError("NormsLaw: h must be positive");
  }

  std::size_t state_dim() const override { return m_ + 1; }  // v components plus s

  std::vector<std::string> component_names() const override {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < m_; ++i) names.push_back("v" + std::to_string(i + 1));
    names.push_back("s");
    return names;
  }

  int sample(std::span<const double> active, std::span<const double> passive, Rng& rng,
             std::span<double> a, std::span<double> b) const override {
    thread_local std::vector<std::size_t> ties;
    detail::argmax_set(active.first(m_), ties);
    const std::size_t pick = ties.size() == 1 ? ties.front() : ties[rng.uniform_index(ties.size())];
    const double s = passive[m_];
    const double add = h_ / (s + h_);
    for (std::size_t c = 0; c <= m_; ++c) a[c] = 0.0;
    for (std::size_t c = 0; c < m_; ++c) b[c] = add * ((c == pick ? 1.0 : 0.0) - passive[c]);
    b[m_] = h_;
    return static_cast<int>(pick);
  }

  bool has_mean_oracles() const override { return true; }
  void mean_a(std::span<const double>, std::span<const double>,
              std::span<double> out) const override {
    for (double& x : out) x = 0.0;
  }
  void mean_b(std::span<const double> active, std::span<const double> passive,
              std::span<double> out) const override {
    thread_local std::vector<double> profile;
    profile.resize(m_);
    detail::argmax_profile(active.first(m_), profile);
    const double s = passive[m_];
    const double add = h_ / (s + h_);
    for (std::size_t c = 0; c < m_; ++c) out[c] = add * (profile[c] - passive[c]);
    out[m_] = h_;
  }

  bool has_second_moment_oracles() const override { return true; }
  void second_moment_a(std::span<const double>, std::span<const double>,
                       Eigen::MatrixXd& out) const override {
    out.setZero(m_ + 1, m_ + 1);
  }
  void second_moment_b(std::span<const double> active, std::span<const double> passive,
                       Eigen::MatrixXd& out) const override {
    thread_local std::vector<std::size_t> ties;
    detail::argmax_set(active.first(m_), ties);
    const double weight = 1.0 / static_cast<double>(ties.size());
    const double s = passive[m_];
    const double add = h_ / (s + h_);
    out.setZero(m_ + 1, m_ + 1);
    std::vector<double> b(m_ + 1);
    for (std::size_t i : ties) {
      for (std::size_t c = 0; c < m_; ++c) b[c] = add * ((c == i ? 1.0 : 0.0) - passive[c]);
      b[m_] = h_;
      for (std::size_t r = 0; r <= m_; ++r)
        for (std::size_t c = 0; c <= m_; ++c)
          out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += weight * b[r] * b[c];
    }
  }

  bool has_jump_scale() const override { return true; }
  double jump_scale() const override { return h_; }
  double scale_exponent() const override { return 1.0; }

  bool admissible(std::span<const double> v, double tol) const override {
    double s = 0.0;
    for (std::size_t c = 0; c < m_; ++c) {
      if (!(v[c] >= -tol)) return false;
      s += v[c];
    }
    return std::abs(s - 1.0) <= std::max(tol, kSimplexSumTol) && v[m_] > 0.0;
  }
  void repair(std::span<double> v) const override {
    detail::project_simplex_inplace(v.first(m_), 0.0);
  }

 private:
  std::size_t m_;
  double h_;
};

inline NormsLaw norms_law(const NormsParams& params) {
  params.validate();
  return NormsLaw(params.m, params.h);
}

// Monokinetic norms dynamics on the network, in rescaled time:
// dV_k/dt = sum_l w_kl (s_k0 + lambda_k t)^{-1} (p(V_l) - V_k) with
// lambda_k = sum_l w_kl rho_l and p the tie-averaged argmax profile.
// Time-inhomogeneous RK4; argmax switches are stepped over without event
// detection.
inline Trajectory solve_norms_monokinetic(const NormsParams& params, const Field& v0, double t_end,
                                          double dt, std::vector<double> snapshot_times) {
  params.validate();
  require_same_space(params.rho, v0, "solve_norms_monokinetic");
  if (v0.dim() != params.m) throw DimensionError("solve_norms_monokinetic: V0 dim != m");
  for (std::size_t k = 0; k < v0.sites(); ++k)
    if (!detail::in_simplex(v0.at(k), 1e-9))
      throw ArgumentError("solve_norms_monokinetic: V0 must lie in the simplex");

  const std::size_t n = v0.sites();
  const std::size_t m = params.m;
  const std::vector<double> w = params.network.materialize();
  std::vector<double> lambda(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) lambda[k] += w[k * n + l] * params.rho(l);

  std::vector<double> profile(n * m);
  auto rhs = [&](double t, const std::vector<double>& y, std::vector<double>& out) {
    for (std::size_t l = 0; l < n; ++l)
      detail::argmax_profile({y.data() + l * m, m}, {profile.data() + l * m, m});
    for (std::size_t k = 0; k < n; ++k) {
      const double memory = 1.0 / (params.s0[k] + lambda[k] * t);
      double* acc = out.data() + k * m;
      std::fill(acc, acc + m, 0.0);
      for (std::size_t l = 0; l < n; ++l) {
        const double c = w[k * n + l] * memory;
        if (c == 0.0) continue;
        for (std::size_t cc = 0; cc < m; ++cc)
          acc[cc] += c * (profile[l * m + cc] - y[k * m + cc]);
      }
    }
  };

  Trajectory traj(v0.space(), detail::state_component_names(m));
  std::vector<double> y = v0.data();
  auto observe = [&](double t, const std::vector<double>& state) {
    TrajectoryPoint pt;
    pt.t = t;
    pt.state = Field::from_data(v0.space(), m, state);
    traj.add_point(std::move(pt));
  };
  detail::integrate_fixed(t_end, dt, TimeScheme::RK4, y, rhs, snapshot_times, observe,
                          [&](double t, std::vector<double>& state) {
                            detail::project_field_rows(state, m, 1e-6, t);
                          });
  return traj;
}

}  // namespace netkin
