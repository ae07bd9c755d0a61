#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "netkin/common.hpp"
#include "netkin/field.hpp"
#include "netkin/integrate.hpp"
#include "netkin/kernel.hpp"
#include "netkin/trajectory.hpp"

namespace netkin {

// Susceptible / infected / removed densities on the kernel's site space.
struct SIRState {
  Field u, v, r;

  void validate() const {
    if (u.empty() || v.empty() || r.empty())
      throw DimensionError("SIRState: all three fields are required");
    require_same_space(u, v, "SIRState");
    require_same_space(u, r, "SIRState");
    if (u.dim() != 1 || v.dim() != 1 || r.dim() != 1)
      throw DimensionError("SIRState: fields must be scalar");
  }
};

enum class SIRKind { Network, ReactionDiffusion, Local };

struct SIRParams {
  Kernel kernel;
  double beta = 0.1;      // removal rate
  SIRKind kind = SIRKind::Network;
  double d1 = 1.0;        // reaction-diffusion kind only
  double d2 = 1.0;
  double sigma = 1.4142135623730951;  // local kind; sqrt(2) gives the bare Laplacian
  double dt = 0.01;
  double t_end = 5.0;
  TimeScheme scheme = TimeScheme::Euler;  // forward Euler is the reference scheme

  void validate() const {
    if (!(beta >= 0.0)) throw ArgumentError("SIRParams: beta must be nonnegative");
    if (!(d1 >= 0.0) || !(d2 >= 0.0))
      throw ArgumentError("SIRParams: diffusivities must be nonnegative");
    if (!(dt > 0.0)) throw ArgumentError("SIRParams: dt must be positive");
    if (!(t_end > 0.0)) throw ArgumentError("SIRParams: t_end must be positive");
  }
};

namespace detail {

struct SIRWork {
  std::vector<double> w;       // materialized kernel
  std::vector<double> alpha;   // kernel mass against rho == 1
  double qw = 1.0;
  std::size_t n = 0;

  SIRWork(const Kernel& kernel) {
    n = kernel.space().size();
    qw = kernel.space().quadrature_weight();
    w = kernel.materialize();
    alpha.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) alpha[i] += w[i * n + j];
      alpha[i] *= qw;
    }
  }

  // integral of w(x, x~) f(x~) dx~
  double mass(const std::vector<double>& f, std::size_t i) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += w[i * n + j] * f[j];
    return acc * qw;
  }

  // nonlocal Laplacian of f at i
  double lap_w(const std::vector<double>& f, std::size_t i) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += w[i * n + j] * (f[j] - f[i]);
    return acc * qw;
  }
};

// strides into the flattened [u | v | r] state vector
inline void sir_rhs_flat(const SIRWork& work, const SIRParams& params, double h,
                         const std::vector<double>& y, std::vector<double>& out) {
  const std::size_t n = work.n;
  const std::vector<double> u(y.begin(), y.begin() + n);
  const std::vector<double> v(y.begin() + n, y.begin() + 2 * n);
  switch (params.kind) {
    case SIRKind::Network:
      for (std::size_t i = 0; i < n; ++i) {
        const double pressure = u[i] * work.mass(v, i);
        out[i] = -pressure;
        out[n + i] = pressure - params.beta * v[i];
        out[2 * n + i] = params.beta * v[i];
      }
      break;
    case SIRKind::ReactionDiffusion:
      for (std::size_t i = 0; i < n; ++i) {
        const double react = work.alpha[i] * u[i] * v[i];
        out[i] = -react + params.d1 * work.lap_w(u, i);
        out[n + i] = react + params.d2 * work.lap_w(v, i) - params.beta * v[i];
        out[2 * n + i] = params.beta * v[i];
      }
      break;
    case SIRKind::Local: {
      const double diff = 0.5 * params.sigma * params.sigma / (h * h);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t prev = (i == 0 ? n - 1 : i - 1);
        const std::size_t next = (i + 1 == n ? 0 : i + 1);
        const double lap_v = diff * (v[prev] - 2.0 * v[i] + v[next]);
        const double flux = u[i] * (work.alpha[i] * v[i] + lap_v);
        out[i] = -flux;
        out[n + i] = flux - params.beta * v[i];
        out[2 * n + i] = params.beta * v[i];
      }
      break;
    }
  }
}

}  // namespace detail

// Time derivatives of (u, v, r). Network kind is the integral form
// du = -u * (w * v); its reaction-diffusion rewriting -alpha u v - u Lap_w v
// is algebraically identical and exercised in tests. The local kind uses the
// three-point grid Laplacian scaled by sigma^2/2.
inline SIRState sir_rhs(const SIRState& state, const SIRParams& params) {
  state.validate();
  params.validate();
  require_same_space(state.u.space(), params.kernel.space(), "sir_rhs");
  if (params.kind == SIRKind::Local && !state.u.space().is_grid())
    throw ArgumentError("sir_rhs: local kind requires a periodic grid");

  detail::SIRWork work(params.kernel);
  const std::size_t n = work.n;
  std::vector<double> y(3 * n), out(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = state.u(i);
    y[n + i] = state.v(i);
    y[2 * n + i] = state.r(i);
  }
  const double h = state.u.space().is_grid() ? state.u.space().spacing() : 1.0;
  detail::sir_rhs_flat(work, params, h, y, out);
  SIRState d{Field(state.u.space(), 1), Field(state.u.space(), 1), Field(state.u.space(), 1)};
  for (std::size_t i = 0; i < n; ++i) {
    d.u(i) = out[i];
    d.v(i) = out[n + i];
    d.r(i) = out[2 * n + i];
  }
  return d;
}

// March the SIR system with forward Euler (reference scheme) or RK4.
// Negative states beyond -1e-9 abort for the network and reaction-diffusion
// kinds; the local kind is allowed to go negative (a known defect of the
// local approximation) and the run only reports it.
inline Trajectory solve_sir(const SIRState& init, const SIRParams& params,
                            std::vector<double> snapshot_times) {
  init.validate();
  params.validate();
  require_same_space(init.u.space(), params.kernel.space(), "solve_sir");
  if (params.kind == SIRKind::Local && !init.u.space().is_grid())
    throw ArgumentError("solve_sir: local kind requires a periodic grid");
  if (!init.u.nonnegative() || !init.v.nonnegative() || !init.r.nonnegative())
    throw ArgumentError("solve_sir: initial state must be nonnegative");

  detail::SIRWork work(params.kernel);
  const std::size_t n = work.n;
  const double h = init.u.space().is_grid() ? init.u.space().spacing() : 1.0;
  std::vector<double> y(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = init.u(i);
    y[n + i] = init.v(i);
    y[2 * n + i] = init.r(i);
  }

  auto rhs = [&](double, const std::vector<double>& state, std::vector<double>& out) {
    detail::sir_rhs_flat(work, params, h, state, out);
  };

  Trajectory traj(init.u.space(), {"u", "v", "r"});
  auto observe = [&](double t, const std::vector<double>& state) {
    TrajectoryPoint pt;
    pt.t = t;
    std::vector<double> rows(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[3 * i] = state[i];
      rows[3 * i + 1] = state[n + i];
      rows[3 * i + 2] = state[2 * n + i];
    }
    pt.state = Field::from_data(init.u.space(), 3, std::move(rows));
    traj.add_point(std::move(pt));
  };
  auto guard = [&](double t, std::vector<double>& state) {
    if (params.kind == SIRKind::Local) return;
    for (double x : state)
      if (x < -1e-9)
        throw NumericalError("solve_sir: state went negative at t = " + std::to_string(t));
  };
  detail::integrate_fixed(params.t_end, params.dt, params.scheme, y, rhs, snapshot_times, observe,
                          guard);
  return traj;
}

struct Fig1Scenario {
  SIRState init;
  SIRParams network;
  SIRParams rd;
  std::vector<double> snapshot_times;
};

// Benchmark epidemic comparison on the unit periodic grid: n = 100 cells,
// triangular kernel 0.3 (0.2 - d)_+, beta = 0.1, u0 == 1, narrow Gaussian
// infected peak at x = 0.5, forward Euler with dt = 0.01, snapshots at
// t = 1..5. The reaction-diffusion twin uses D1 = D2 = 1 through the same
// nonlocal operator.
inline Fig1Scenario fig1_scenario() {
  const SiteSpace grid = SiteSpace::periodic_grid(100);
  Kernel kernel = Kernel::triangle(grid, 0.2, 0.3);

  Field u0 = Field::constant(grid, 1.0);
  Field v0(grid, 1, 0.0);
  const double width = 0.02;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.position(i);
    double d = std::abs(x - 0.5);
    d = std::min(d, 1.0 - d);
    v0(i) = std::exp(-0.5 * d * d / (width * width));
  }
  Field r0(grid, 1, 0.0);

  SIRParams network{kernel, 0.1, SIRKind::Network};
  network.dt = 0.01;
  network.t_end = 5.0;
  SIRParams rd = network;
  rd.kind = SIRKind::ReactionDiffusion;
  rd.d1 = 1.0;
  rd.d2 = 1.0;
  return {SIRState{std::move(u0), std::move(v0), std::move(r0)}, std::move(network), std::move(rd),
          {1.0, 2.0, 3.0, 4.0, 5.0}};
}

struct PositivityReport {
  std::vector<std::size_t> flagged_sites;  // sites where the local model makes du/dt > 0
  double max_du = 0.0;
};

// The local approximation loses the monotonicity of u: where the scaled
// Laplacian satisfies (sigma^2/2) Lap v < -alpha v (and u > 0), du/dt turns
// positive. Flags those sites and reports the largest du/dt.
inline PositivityReport positivity_violation_check(const SIRState& state, const SIRParams& params) {
  if (params.kind != SIRKind::Local)
    throw ArgumentError("positivity_violation_check: requires the local model kind");
  state.validate();
  if (!state.u.space().is_grid())
    throw ArgumentError("positivity_violation_check: requires a periodic grid");
  require_same_space(state.u.space(), params.kernel.space(), "positivity_violation_check");

  const SIRState d = sir_rhs(state, params);
  const Field alpha = kernel_mass(params.kernel);
  const std::size_t n = state.u.sites();
  const double h = state.u.space().spacing();
  const double diff = 0.5 * params.sigma * params.sigma / (h * h);

  PositivityReport report;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = (i == 0 ? n - 1 : i - 1);
    const std::size_t next = (i + 1 == n ? 0 : i + 1);
    const double lap_v = diff * (state.v(prev) - 2.0 * state.v(i) + state.v(next));
    if (lap_v < -alpha(i) * state.v(i)) report.flagged_sites.push_back(i);
    report.max_du = std::max(report.max_du, d.u(i));
  }
  return report;
}

}  // namespace netkin
