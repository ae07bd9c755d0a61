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

namespace detail {

inline double pow_alpha(double x, double alpha) {
  // Integer fast paths; the shipped scenarios use alpha_exp in {1, 2}.
  if (alpha == 1.0) return x;
  if (alpha == 2.0) return x * x;
  if (alpha == 3.0) return x * x * x;
  return std::pow(x, alpha);
}

// p_i = v_i^alpha / sum_j v_j^alpha. Tiny negative components (rounding drift
// in solver stages) are clamped before exponentiation.
inline void choice_probabilities_into(std::span<const double> v, double alpha,
                                      std::span<double> out) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i] > 0.0 ? v[i] : 0.0;
    out[i] = pow_alpha(x, alpha);
    s += out[i];
  }
  if (!(s > 0.0)) throw DegenerateStateError("choice_probabilities: state has no positive mass");
  for (std::size_t i = 0; i < v.size(); ++i) out[i] /= s;
}

}  // namespace detail

// Conformity-biased choice map p: K -> K, p_i = v_i^alpha / sum v_j^alpha.
inline SimplexVector choice_probabilities(const SimplexVector& v, double alpha_exp) {
  if (!(alpha_exp >= 1.0)) throw ArgumentError("choice_probabilities: alpha_exp must be >= 1");
  std::vector<double> out(v.size());
  detail::choice_probabilities_into(v.span(), alpha_exp, out);
  return SimplexVector(std::move(out));
}

// Inverse of the choice map: v_i proportional to q_i^(1/alpha), normalized.
// Closed form for this family; the residual is verified to 1e-10.
inline SimplexVector invert_p(const SimplexVector& q, double alpha_exp) {
  if (!(alpha_exp >= 1.0)) throw ArgumentError("invert_p: alpha_exp must be >= 1");
  const std::size_t m = q.size();
  std::vector<double> v(m);
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    v[i] = std::pow(q[i], 1.0 / alpha_exp);
    s += v[i];
  }
  if (!(s > 0.0)) throw DegenerateStateError("invert_p: input has no positive mass");
  for (double& x : v) x /= s;
  std::vector<double> check(m);
  detail::choice_probabilities_into(v, alpha_exp, check);
  for (std::size_t i = 0; i < m; ++i)
    if (std::abs(check[i] - q[i]) > 1e-10)
      throw NumericalError("invert_p: residual above tolerance");
  return SimplexVector(std::move(v));
}

// Post-collision memory after hearing variant i:
// v' = v/(1+gamma) + gamma/(1+gamma) e_i. Stays in K exactly.
inline SimplexVector hearing_collision(const SimplexVector& v, std::size_t variant, double gamma) {
  if (variant >= v.size()) throw ArgumentError("hearing_collision: variant index out of range");
  if (!(gamma > 0.0)) throw ArgumentError("hearing_collision: gamma must be positive");
  const double shrink = 1.0 / (1.0 + gamma);
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] * shrink;
  out[variant] += gamma * shrink;
  return SimplexVector(std::move(out));
}

// Pre-collision memory v* = (1+gamma) v' - gamma e_i. Returned raw: rounding
// can leave components a few ulp below zero.
inline std::vector<double> hearing_collision_inverse(const SimplexVector& post,
                                                     std::size_t variant, double gamma) {
  if (variant >= post.size()) throw ArgumentError("hearing_collision_inverse: index out of range");
  std::vector<double> out(post.size());
  for (std::size_t j = 0; j < post.size(); ++j) out[j] = (1.0 + gamma) * post[j];
  out[variant] -= gamma;
  return out;
}

struct DialectParams {
  std::size_t m = 2;        // number of variants
  double alpha_exp = 2.0;   // conformity exponent, >= 1
  double gamma = 0.1;       // memory weight, > 0, naturally small
  Kernel kernel;
  Field rho;                // site density

  void validate() const {
    if (m < 1) throw ArgumentError("DialectParams: m must be positive");
    if (!(alpha_exp >= 1.0)) throw ArgumentError("DialectParams: alpha_exp must be >= 1");
    if (!(gamma > 0.0)) throw ArgumentError("DialectParams: gamma must be positive");
    if (rho.empty() || rho.dim() != 1)
      throw DimensionError("DialectParams: rho must be a scalar field");
    if (!rho.nonnegative()) throw ArgumentError("DialectParams: rho must be nonnegative");
    require_same_space(kernel.space(), rho.space(), "DialectParams");
  }
};

// Hearing interactions: the active agent speaks variant i with probability
// p_i(v_active); the passive agent's memory jumps by
// b = gamma/(1+gamma) (e_i - v_passive); a = 0.
class DialectLaw final : public InteractionLaw {
 public:
  DialectLaw(std::size_t m, double alpha_exp, double gamma)
      : m_(m), alpha_(alpha_exp), gamma_(gamma), eps_(gamma / (1.0 + gamma)) {
    if (m < 1) throw ArgumentError("DialectLaw: m must be positive");
    if (!(alpha_exp >= 1.0)) throw ArgumentError("DialectLaw: alpha_exp must be >= 1");
    if (!(gamma > 0.0)) throw ArgumentError("DialectLaw: gamma must be positive");
  }

  std::size_t state_dim() const override { return m_; }

  int sample(std::span<const double> active, std::span<const double> passive, Rng& rng,
             std::span<double> a, std::span<double> b) const override {
    thread_local std::vector<double> probs;
    probs.resize(m_);
    detail::choice_probabilities_into(active, alpha_, probs);
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t pick = m_ - 1;
    for (std::size_t i = 0; i < m_; ++i) {
      acc += probs[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    for (std::size_t c = 0; c < m_; ++c) {
      a[c] = 0.0;
      b[c] = eps_ * ((c == pick ? 1.0 : 0.0) - passive[c]);
    }
    return static_cast<int>(pick);
  }

  bool has_mean_oracles() const override { return true; }
  void mean_a(std::span<const double>, std::span<const double>,
              std::span<double> out) const override {
    for (double& x : out) x = 0.0;
  }
  void mean_b(std::span<const double> active, std::span<const double> passive,
              std::span<double> out) const override {
    thread_local std::vector<double> probs;
    probs.resize(m_);
    detail::choice_probabilities_into(active, alpha_, probs);
    for (std::size_t c = 0; c < m_; ++c) out[c] = eps_ * (probs[c] - passive[c]);
  }

  bool has_second_moment_oracles() const override { return true; }
  void second_moment_a(std::span<const double>, std::span<const double>,
                       Eigen::MatrixXd& out) const override {
    out.setZero(m_, m_);
  }
  void second_moment_b(std::span<const double> active, std::span<const double> passive,
                       Eigen::MatrixXd& out) const override {
    thread_local std::vector<double> probs;
    probs.resize(m_);
    detail::choice_probabilities_into(active, alpha_, probs);
    out.setZero(m_, m_);
    const double c2 = eps_ * eps_;
    for (std::size_t i = 0; i < m_; ++i) {
      if (probs[i] == 0.0) continue;
      for (std::size_t r = 0; r < m_; ++r) {
        const double br = (r == i ? 1.0 : 0.0) - passive[r];
        for (std::size_t c = 0; c < m_; ++c) {
          const double bc = (c == i ? 1.0 : 0.0) - passive[c];
          out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += probs[i] * c2 * br * bc;
        }
      }
    }
  }

  bool has_jump_scale() const override { return true; }
  double jump_scale() const override { return eps_; }
  double scale_exponent() const override { return 1.0; }

  bool admissible(std::span<const double> v, double tol) const override {
    double s = 0.0;
    for (double x : v) {
      if (!(x >= -tol)) return false;
      s += x;
    }
    return std::abs(s - 1.0) <= std::max(tol, kSimplexSumTol);
  }
  void repair(std::span<double> v) const override { detail::project_simplex_inplace(v, 0.0); }

  double alpha_exp() const { return alpha_; }
  double gamma() const { return gamma_; }

 private:
  std::size_t m_;
  double alpha_;
  double gamma_;
  double eps_;  // gamma / (1 + gamma), the jump scale
};

inline DialectLaw dialect_law(const DialectParams& params) {
  params.validate();
  return DialectLaw(params.m, params.alpha_exp, params.gamma);
}

enum class DialectVariant { NonlinearDiffusion, LinearDiffusion };
enum class LocalVariant { Burridge, AllenCahn, PForm };

// Concentrated-profile dialect dynamics in rescaled time. The nonlinear
// variant diffuses p(V) (degenerate at the vertices), the linear variant
// diffuses V itself; both share the multistable reaction -kappa (V - p(V)).
// Sites with rho below 1e-12 are frozen.
inline Trajectory solve_dialect_monokinetic(const DialectParams& params, const Field& v0,
                                            double t_end, double dt, DialectVariant variant,
                                            std::vector<double> snapshot_times) {
  params.validate();
  require_same_space(params.rho, v0, "solve_dialect_monokinetic");
  if (v0.dim() != params.m) throw DimensionError("solve_dialect_monokinetic: V0 dim != m");
  for (std::size_t k = 0; k < v0.sites(); ++k)
    if (!detail::in_simplex(v0.at(k), 1e-9))
      throw ArgumentError("solve_dialect_monokinetic: V0 must lie in the simplex");

  const std::size_t n = v0.sites();
  const std::size_t m = params.m;
  const double qw = v0.space().quadrature_weight();
  const std::vector<double> w = params.kernel.materialize();
  std::vector<double> wrho(n * n);  // quadrature-weighted kernel against rho
  std::vector<double> kappa(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      wrho[k * n + l] = qw * w[k * n + l] * params.rho(l);
      kappa[k] += wrho[k * n + l];
    }
  }
  std::vector<bool> frozen(n);
  for (std::size_t k = 0; k < n; ++k) frozen[k] = params.rho(k) <= 1e-12;

  std::vector<double> p(n * m);
  const double alpha = params.alpha_exp;
  auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k)
      detail::choice_probabilities_into({y.data() + k * m, m}, alpha, {p.data() + k * m, m});
    const std::vector<double>& diffused = (variant == DialectVariant::NonlinearDiffusion) ? p : y;
    for (std::size_t k = 0; k < n; ++k) {
      double* acc = out.data() + k * m;
      std::fill(acc, acc + m, 0.0);
      if (frozen[k]) continue;
      for (std::size_t l = 0; l < n; ++l) {
        const double c = wrho[k * n + l];
        if (c == 0.0) continue;
        const double* dl = diffused.data() + l * m;
        for (std::size_t cc = 0; cc < m; ++cc) acc[cc] += c * dl[cc];
      }
      // reaction and loss terms combine to -kappa V (nonlinear) via
      // -kappa (V - p) + integral w rho (p~ - p)  =  (W_rho p~) - kappa V.
      if (variant == DialectVariant::NonlinearDiffusion) {
        for (std::size_t cc = 0; cc < m; ++cc) acc[cc] -= kappa[k] * y[k * m + cc];
      } else {
        for (std::size_t cc = 0; cc < m; ++cc)
          acc[cc] += -kappa[k] * (y[k * m + cc] - p[k * m + cc]) - kappa[k] * y[k * m + cc];
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

// Local limits on the periodic grid, method of lines with the standard
// three-point Laplacian. The p-form evolves the probability field P with
// dP = J_p(V(P)) dV, an independent algebraic route to the same dynamics.
inline Trajectory solve_burridge_local(const DialectParams& params, const Field& v0, double sigma,
                                       double kappa_const, double t_end, double dt,
                                       LocalVariant variant, std::vector<double> snapshot_times) {
  if (!v0.empty() && !v0.space().is_grid())
    throw ArgumentError("solve_burridge_local: requires a periodic grid");
  if (params.m != v0.dim()) throw DimensionError("solve_burridge_local: V0 dim != m");
  if (!(sigma >= 0.0)) throw ArgumentError("solve_burridge_local: sigma must be nonnegative");
  if (!(kappa_const >= 0.0)) throw ArgumentError("solve_burridge_local: kappa must be nonnegative");
  for (std::size_t k = 0; k < v0.sites(); ++k)
    if (!detail::in_simplex(v0.at(k), 1e-9))
      throw ArgumentError("solve_burridge_local: V0 must lie in the simplex");

  const std::size_t n = v0.sites();
  const std::size_t m = params.m;
  const double h = v0.space().spacing();
  const double diff = 0.5 * sigma * sigma / (h * h);
  const double alpha = params.alpha_exp;

  std::vector<double> p(n * m), vbuf(n * m);
  auto stencil = [&](const std::vector<double>& f, std::size_t k, std::size_t c) {
    const std::size_t prev = (k == 0 ? n - 1 : k - 1);
    const std::size_t next = (k + 1 == n ? 0 : k + 1);
    return f[prev * m + c] - 2.0 * f[k * m + c] + f[next * m + c];
  };

  auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& out) {
    if (variant == LocalVariant::PForm) {
      // y holds P; V = p^{-1}(P) componentwise via the closed-form inverse.
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
          const double q = y[k * m + c] > 0.0 ? y[k * m + c] : 0.0;
          vbuf[k * m + c] = std::pow(q, 1.0 / alpha);
          s += vbuf[k * m + c];
        }
        for (std::size_t c = 0; c < m; ++c) vbuf[k * m + c] /= s;
      }
      for (std::size_t k = 0; k < n; ++k) {
        // dV_c = -kappa (V - P) + (sigma^2/2) Delta P, then dP = J_p(V) dV.
        double dv[64];
        for (std::size_t c = 0; c < m; ++c)
          dv[c] = -kappa_const * (vbuf[k * m + c] - y[k * m + c]) + diff * stencil(y, k, c);
        const double* v = vbuf.data() + k * m;
        double s_alpha = 0.0;
        for (std::size_t c = 0; c < m; ++c) s_alpha += detail::pow_alpha(v[c], alpha);
        for (std::size_t r = 0; r < m; ++r) {
          double acc = 0.0;
          const double pr = detail::pow_alpha(v[r], alpha) / s_alpha;
          for (std::size_t c = 0; c < m; ++c) {
            const double vpow = alpha * detail::pow_alpha(v[c], alpha - 1.0) / s_alpha;
            const double jrc = (r == c ? vpow : 0.0) - pr * vpow;
            acc += jrc * dv[c];
          }
          out[k * m + r] = acc;
        }
      }
      return;
    }
    for (std::size_t k = 0; k < n; ++k)
      detail::choice_probabilities_into({y.data() + k * m, m}, alpha, {p.data() + k * m, m});
    const std::vector<double>& diffused = (variant == LocalVariant::Burridge) ? p : y;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t c = 0; c < m; ++c)
        out[k * m + c] =
            -kappa_const * (y[k * m + c] - p[k * m + c]) + diff * stencil(diffused, k, c);
  };

  if (m > 64) throw ArgumentError("solve_burridge_local: m too large");
  std::vector<double> y(n * m);
  if (variant == LocalVariant::PForm) {
    for (std::size_t k = 0; k < n; ++k)
      detail::choice_probabilities_into(v0.at(k), alpha, {y.data() + k * m, m});
  } else {
    y = v0.data();
  }

  Trajectory traj(v0.space(), detail::state_component_names(m));
  auto observe = [&](double t, const std::vector<double>& state) {
    TrajectoryPoint pt;
    pt.t = t;
    if (variant == LocalVariant::PForm) {
      // report in V space so all variants are directly comparable
      std::vector<double> v(n * m);
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
          v[k * m + c] = std::pow(std::max(state[k * m + c], 0.0), 1.0 / alpha);
          s += v[k * m + c];
        }
        for (std::size_t c = 0; c < m; ++c) v[k * m + c] /= s;
      }
      pt.state = Field::from_data(v0.space(), m, std::move(v));
    } else {
      pt.state = Field::from_data(v0.space(), m, state);
    }
    traj.add_point(std::move(pt));
  };

  try {
    detail::integrate_fixed(t_end, dt, TimeScheme::RK4, y, rhs, snapshot_times, observe,
                            [&](double t, std::vector<double>& state) {
                              detail::project_field_rows(state, m, 1e-6, t);
                            });
  } catch (const NumericalError& e) {
    const double suggestion = sigma > 0.0 ? 0.5 * h * h / (sigma * sigma) : dt;
    throw NumericalError(std::string(e.what()) + "; likely a CFL violation, try dt <= " +
                         std::to_string(suggestion));
  }
  return traj;
}

struct VarianceDecayRow {
  double t = 0.0;
  double value = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct VarianceDecayReport {
  double kappa0 = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::vector<VarianceDecayRow> rows;
};

// Checks the exponential concentration bound V(t) <= exp(-2 kappa0 t) V(0)
// along a trajectory carrying the quadratic-variation observable. With
// kappa0 == 0 only monotone non-increase is asserted. mc_allowance, when
// given, adds 3 standard errors per snapshot for stochastic runs.
inline VarianceDecayReport variance_decay_check(const Trajectory& traj, double kappa0,
                                                double tol = 0.05,
                                                std::span<const double> mc_allowance = {}) {
  if (!traj.has_quad_variation())
    throw ArgumentError("variance_decay_check: trajectory has no quadratic-variation observable");
  if (!(kappa0 >= 0.0)) throw ArgumentError("variance_decay_check: kappa0 must be nonnegative");
  if (!mc_allowance.empty() && mc_allowance.size() != traj.points().size())
    throw ArgumentError("variance_decay_check: allowance size mismatch");

  VarianceDecayReport report;
  report.kappa0 = kappa0;
  report.tolerance = tol;
  const double t0 = traj.front().t;
  const double v0 = traj.front().quad_variation;
  double prev = v0;
  for (std::size_t k = 0; k < traj.points().size(); ++k) {
    const auto& pt = traj.points()[k];
    VarianceDecayRow row;
    row.t = pt.t;
    row.value = pt.quad_variation;
    row.bound = kappa0 > 0.0 ? std::exp(-2.0 * kappa0 * (pt.t - t0)) * v0 : prev;
    const double allow = mc_allowance.empty() ? 0.0 : 3.0 * mc_allowance[k];
    row.pass = row.value <= row.bound * (1.0 + tol) + allow;
    report.passed = report.passed && row.pass;
    prev = pt.quad_variation;
    report.rows.push_back(row);
  }
  return report;
}

// Coarsening diagnostic: sign changes of V_1 - 1/M around the periodic grid.
inline std::size_t interface_count(const Field& v) {
  if (v.empty()) throw ArgumentError("interface_count: empty field");
  const std::size_t n = v.sites();
  const double mid = 1.0 / static_cast<double>(v.dim());
  std::size_t count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = v(k, 0) - mid;
    const double b = v((k + 1) % n, 0) - mid;
    if ((a >= 0.0) != (b >= 0.0)) ++count;
  }
  return count;
}

// Largest Euclidean distance of any site's state to its nearest simplex vertex.
inline double max_vertex_distance(const Field& v) {
  if (v.empty()) throw ArgumentError("max_vertex_distance: empty field");
  double worst = 0.0;
  for (std::size_t k = 0; k < v.sites(); ++k) {
    auto row = v.at(k);
    double s2 = 0.0, best = 0.0;
    for (double x : row) {
      s2 += x * x;
      best = std::max(best, x);
    }
    worst = std::max(worst, std::sqrt(std::max(s2 + 1.0 - 2.0 * best, 0.0)));
  }
  return worst;
}

}  // namespace netkin
