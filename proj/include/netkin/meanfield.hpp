#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "netkin/common.hpp"
#include "netkin/field.hpp"
#include "netkin/integrate.hpp"
#include "netkin/kernel.hpp"
#include "netkin/law.hpp"
#include "netkin/particle.hpp"
#include "netkin/rng.hpp"
#include "netkin/trajectory.hpp"

namespace netkin {

// Mean-field drift kernel K(z, z~) = w(x, x~) (E[a](z, z~) + E[b](z~, z)).
// When the law carries jump-scale metadata the eps^{-alpha} rescaling is
// applied, matching the rescaled-time transport limit.
class DriftKernel {
 public:
  struct Scratch {
    std::vector<double> ma, mb;
  };

  DriftKernel(Kernel kernel, const InteractionLaw& law, bool apply_rescaling = true)
      : kernel_(std::move(kernel)), law_(&law) {
    if (!law.has_mean_oracles())
      throw UnsupportedError("DriftKernel: law provides no mean jump oracles");
    factor_ = 1.0;
    if (apply_rescaling && law.has_jump_scale())
      factor_ = std::pow(law.jump_scale(), -law.scale_exponent());
  }

  std::size_t state_dim() const { return law_->state_dim(); }
  const Kernel& kernel() const { return kernel_; }
  const InteractionLaw& law() const { return *law_; }
  double rescale_factor() const { return factor_; }

  // K(z, z~) with z = (site, v) the field point and z~ = (tsite, tv) the
  // interaction partner. Zero whenever w vanishes.
  void eval(std::size_t site, std::span<const double> v, std::size_t tsite,
            std::span<const double> tv, std::span<double> out, Scratch& scratch) const {
    eval_given_rate(kernel_.eval(site, tsite), v, tv, out, scratch);
  }

  // Hot-path variant for solvers that have materialized the kernel table.
  void eval_given_rate(double w, std::span<const double> v, std::span<const double> tv,
                       std::span<double> out, Scratch& scratch) const {
    if (w == 0.0) {
      for (double& x : out) x = 0.0;
      return;
    }
    const std::size_t dim = state_dim();
    scratch.ma.resize(dim);
    scratch.mb.resize(dim);
    law_->mean_a(v, tv, scratch.ma);   // z active, z~ passive
    law_->mean_b(tv, v, scratch.mb);   // z~ active, z passive
    const double c = w * factor_;
    for (std::size_t k = 0; k < dim; ++k) out[k] = c * (scratch.ma[k] + scratch.mb[k]);
  }

 private:
  Kernel kernel_;
  const InteractionLaw* law_;
  double factor_ = 1.0;
};

inline std::vector<double> drift_kernel(const Kernel& kernel, const InteractionLaw& law,
                                        std::size_t site, std::span<const double> v,
                                        std::size_t tsite, std::span<const double> tv) {
  DriftKernel k(kernel, law);
  DriftKernel::Scratch scratch;
  std::vector<double> out(law.state_dim());
  k.eval(site, v, tsite, tv, out, scratch);
  return out;
}

// Jump covariance kernel A(z, z~) = (1/2) w (E[a@a](z, z~) + E[b@b](z~, z)),
// symmetric positive semidefinite. Unrescaled; time-changed consumers apply
// the drift's rescale factor themselves.
class DiffusionKernel {
 public:
  DiffusionKernel(Kernel kernel, const InteractionLaw& law)
      : kernel_(std::move(kernel)), law_(&law) {
    if (!law.has_second_moment_oracles())
      throw UnsupportedError("DiffusionKernel: law provides no second-moment oracles");
  }

  std::size_t state_dim() const { return law_->state_dim(); }
  const Kernel& kernel() const { return kernel_; }

  void eval(std::size_t site, std::span<const double> v, std::size_t tsite,
            std::span<const double> tv, Eigen::MatrixXd& out) const {
    eval_given_rate(kernel_.eval(site, tsite), v, tv, out);
  }

  void eval_given_rate(double w, std::span<const double> v, std::span<const double> tv,
                       Eigen::MatrixXd& out) const {
    const auto dim = static_cast<Eigen::Index>(state_dim());
    out.setZero(dim, dim);
    if (w == 0.0) return;
    thread_local Eigen::MatrixXd maa, mbb;
    maa.setZero(dim, dim);
    mbb.setZero(dim, dim);
    law_->second_moment_a(v, tv, maa);
    law_->second_moment_b(tv, v, mbb);
    out = 0.5 * w * (maa + mbb);
    out = 0.5 * (out + out.transpose()).eval();
  }

 private:
  Kernel kernel_;
  const InteractionLaw* law_;
};

inline Eigen::MatrixXd diffusion_kernel(const Kernel& kernel, const InteractionLaw& law,
                                        std::size_t site, std::span<const double> v,
                                        std::size_t tsite, std::span<const double> tv) {
  DiffusionKernel k(kernel, law);
  Eigen::MatrixXd out;
  k.eval(site, v, tsite, tv, out);
  return out;
}

namespace detail {

inline TrajectoryPoint observables_point(double t, const ParticleEnsemble& ensemble,
                                         bool keep_states) {
  EnsembleObservables obs = ensemble_observables(ensemble, ensemble.space());
  TrajectoryPoint pt;
  pt.t = t;
  pt.state = std::move(obs.mean_state);
  pt.eta = std::move(obs.eta);
  pt.quad_variation = obs.quad_variation;
  if (keep_states) pt.particle_states = ensemble.states();
  return pt;
}

}  // namespace detail

// Transport characteristics with frozen positions: dV_i/dt =
// (1/N) sum_j K(z_i, z_j), classical RK4. The empirical measure of mu0 is the
// (stationary) background the drift integrates against, self-term included.
inline Trajectory solve_characteristics(const ParticleEnsemble& mu0, const DriftKernel& drift,
                                        double t_end, double dt,
                                        std::vector<double> snapshot_times,
                                        std::size_t store_states_limit = 10000) {
  if (mu0.state_dim() != drift.state_dim())
    throw DimensionError("solve_characteristics: state dim mismatch");
  require_same_space(mu0.space(), drift.kernel().space(), "solve_characteristics");

  const std::size_t n = mu0.size();
  const std::size_t dim = mu0.state_dim();
  const std::size_t n_sites = mu0.space().size();
  const double inv_n = 1.0 / static_cast<double>(n);
  ParticleEnsemble work = mu0;
  Trajectory traj(mu0.space(), drift.law().component_names());
  const bool keep_states = n <= store_states_limit;

  const std::vector<double> rates = drift.kernel().materialize();
  DriftKernel::Scratch scratch;
  std::vector<double> kbuf(dim);
  auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const double> vi(y.data() + i * dim, dim);
      const double* row = rates.data() + mu0.site(i) * n_sites;
      double* acc = out.data() + i * dim;
      for (std::size_t j = 0; j < n; ++j) {
        std::span<const double> vj(y.data() + j * dim, dim);
        drift.eval_given_rate(row[mu0.site(j)], vi, vj, kbuf, scratch);
        for (std::size_t c = 0; c < dim; ++c) acc[c] += kbuf[c];
      }
      for (std::size_t c = 0; c < dim; ++c) acc[c] *= inv_n;
    }
  };

  std::vector<double> y = mu0.states();
  auto observe = [&](double t, const std::vector<double>& state) {
    work.states() = state;
    traj.add_point(detail::observables_point(t, work, keep_states));
  };
  detail::integrate_fixed(t_end, dt, TimeScheme::RK4, y, rhs, snapshot_times, observe,
                          [](double, const std::vector<double>&) {});
  return traj;
}

// Concentrated-profile dynamics dV(x)/dt = sum_l q_l K(x, V(x), x_l, V(x_l))
// with q the quadrature-weighted stationary site measure eta.
inline Trajectory solve_monokinetic(const Field& eta, const Field& v0, const DriftKernel& drift,
                                    double t_end, double dt, std::vector<double> snapshot_times) {
  if (eta.empty() || eta.dim() != 1)
    throw DimensionError("solve_monokinetic: eta must be a scalar field");
  if (!eta.nonnegative()) throw ArgumentError("solve_monokinetic: eta must be nonnegative");
  require_same_space(eta, v0, "solve_monokinetic");
  require_same_space(eta.space(), drift.kernel().space(), "solve_monokinetic");
  if (v0.dim() != drift.state_dim()) throw DimensionError("solve_monokinetic: state dim mismatch");

  const std::size_t n = eta.sites();
  const std::size_t dim = v0.dim();
  const double qw = eta.space().quadrature_weight();
  std::vector<double> q(n);
  for (std::size_t l = 0; l < n; ++l) q[l] = qw * eta(l);

  Trajectory traj(eta.space(), drift.law().component_names());
  const std::vector<double> rates = drift.kernel().materialize();
  DriftKernel::Scratch scratch;
  std::vector<double> kbuf(dim);
  auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      std::span<const double> vk(y.data() + k * dim, dim);
      const double* row = rates.data() + k * n;
      double* acc = out.data() + k * dim;
      for (std::size_t l = 0; l < n; ++l) {
        if (q[l] == 0.0) continue;
        std::span<const double> vl(y.data() + l * dim, dim);
        drift.eval_given_rate(row[l], vk, vl, kbuf, scratch);
        for (std::size_t c = 0; c < dim; ++c) acc[c] += q[l] * kbuf[c];
      }
    }
  };

  std::vector<double> y = v0.data();
  auto observe = [&](double t, const std::vector<double>& state) {
    TrajectoryPoint pt;
    pt.t = t;
    pt.state = Field::from_data(eta.space(), dim, state);
    traj.add_point(std::move(pt));
  };
  detail::integrate_fixed(t_end, dt, TimeScheme::RK4, y, rhs, snapshot_times, observe,
                          [](double, const std::vector<double>&) {});
  return traj;
}

// Euler-Maruyama particle approximation of the second-order (Fokker-Planck)
// closure: dV_i = Kbar_i dt + sqrt(2) sigma_i dW_i with sigma_i sigma_i^T =
// Abar_i, the empirical averages of the drift and covariance kernels. Runs in
// the same (rescaled) time as the drift, so the aggregated A picks up the
// drift's rescale factor. States are repaired to the law's admissible set
// after every step.
inline Trajectory simulate_fokker_planck_particles(const ParticleEnsemble& mu0,
                                                   const DriftKernel& drift,
                                                   const DiffusionKernel& diffusion, double t_end,
                                                   double dt, std::uint64_t seed,
                                                   std::vector<double> snapshot_times,
                                                   std::size_t store_states_limit = 10000) {
  if (!(dt > 0.0)) throw ArgumentError("simulate_fokker_planck_particles: dt must be positive");
  if (mu0.state_dim() != drift.state_dim() || mu0.state_dim() != diffusion.state_dim())
    throw DimensionError("simulate_fokker_planck_particles: state dim mismatch");
  require_same_space(mu0.space(), drift.kernel().space(), "simulate_fokker_planck_particles");
  detail::validate_stops(snapshot_times, t_end);

  const std::size_t n = mu0.size();
  const std::size_t dim = mu0.state_dim();
  const std::size_t n_sites = mu0.space().size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double a_factor = drift.rescale_factor();

  ParticleEnsemble ensemble = mu0;
  Trajectory traj(mu0.space(), drift.law().component_names(), seed);
  const bool keep_states = n <= store_states_limit;
  Rng rng(seed);

  const std::vector<double> rates = drift.kernel().materialize();
  DriftKernel::Scratch scratch;
  std::vector<double> kbuf(dim), kbar(n * dim);
  Eigen::MatrixXd abuf(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::MatrixXd abar(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  std::vector<double> next(n * dim);
  Eigen::VectorXd noise(static_cast<Eigen::Index>(dim));

  double t = 0.0;
  std::size_t next_snap = 0;
  auto snapshot_due = [&](double time) {
    while (next_snap < snapshot_times.size() && snapshot_times[next_snap] <= time + 1e-12) {
      traj.add_point(detail::observables_point(snapshot_times[next_snap], ensemble, keep_states));
      ++next_snap;
    }
  };
  snapshot_due(0.0);

  const std::vector<double>& cur = ensemble.states();
  while (t < t_end - 1e-12 * std::max(1.0, t_end)) {
    double target = t_end;
    if (next_snap < snapshot_times.size()) target = std::min(target, snapshot_times[next_snap]);
    const double step = std::min(dt, target - t);
    const double sq = std::sqrt(2.0 * step);

    for (std::size_t i = 0; i < n; ++i) {
      std::span<const double> vi(cur.data() + i * dim, dim);
      const double* row = rates.data() + mu0.site(i) * n_sites;
      double* kacc = kbar.data() + i * dim;
      std::fill(kacc, kacc + dim, 0.0);
      abar.setZero();
      for (std::size_t j = 0; j < n; ++j) {
        std::span<const double> vj(cur.data() + j * dim, dim);
        drift.eval_given_rate(row[mu0.site(j)], vi, vj, kbuf, scratch);
        for (std::size_t c = 0; c < dim; ++c) kacc[c] += kbuf[c];
        diffusion.eval_given_rate(row[mu0.site(j)], vi, vj, abuf);
        abar += abuf;
      }
      for (std::size_t c = 0; c < dim; ++c) kacc[c] *= inv_n;
      abar *= inv_n * a_factor;

      // Symmetric square root with eigenvalues clamped at zero.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(abar);
      if (eig.info() != Eigen::Success)
        throw NumericalError("simulate_fokker_planck_particles: eigendecomposition failed");
      Eigen::VectorXd lam = eig.eigenvalues();
      const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
      for (Eigen::Index k = 0; k < lam.size(); ++k) {
        if (lam[k] < -1e-12 * scale)
          throw NumericalError("simulate_fokker_planck_particles: covariance kernel not PSD");
        lam[k] = std::sqrt(std::max(lam[k], 0.0));
      }
      const Eigen::MatrixXd sigma =
          eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
      for (std::size_t c = 0; c < dim; ++c) noise[static_cast<Eigen::Index>(c)] = rng.normal();
      const Eigen::VectorXd kick = sigma * noise;
      for (std::size_t c = 0; c < dim; ++c)
        next[i * dim + c] = cur[i * dim + c] + step * kacc[c] + sq * kick[static_cast<Eigen::Index>(c)];
    }
    ensemble.states() = next;
    for (std::size_t i = 0; i < n; ++i) drift.law().repair(ensemble.state(i));
    t += step;
    snapshot_due(t);
  }
  while (next_snap < snapshot_times.size()) {
    traj.add_point(detail::observables_point(snapshot_times[next_snap], ensemble, keep_states));
    ++next_snap;
  }
  return traj;
}

// Empirical first-moment derivative (1/N^2) sum_{i,j} W(z_i, z_j) with
// W(z, z~) = w(x, x~) (E[a](z, z~) + E[b](z~, z)), in unrescaled time.
// Diagnostic for the non-closed moment equation.
inline std::vector<double> first_moment_rhs(const ParticleEnsemble& mu, const Kernel& kernel,
                                            const InteractionLaw& law) {
  if (mu.state_dim() != law.state_dim())
    throw DimensionError("first_moment_rhs: state dim mismatch");
  require_same_space(mu.space(), kernel.space(), "first_moment_rhs");
  const std::size_t n = mu.size();
  const std::size_t dim = mu.state_dim();
  std::vector<double> out(dim, 0.0), ma(dim), mb(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double w = kernel.eval(mu.site(i), mu.site(j));
      if (w == 0.0) continue;
      law.mean_a(mu.state(i), mu.state(j), ma);
      law.mean_b(mu.state(j), mu.state(i), mb);
      for (std::size_t c = 0; c < dim; ++c) out[c] += w * (ma[c] + mb[c]);
    }
  }
  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (double& x : out) x *= inv_n2;
  return out;
}

}  // namespace netkin
