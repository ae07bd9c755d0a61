#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "netkin/common.hpp"
#include "netkin/field.hpp"
#include "netkin/kernel.hpp"
#include "netkin/law.hpp"
#include "netkin/rng.hpp"
#include "netkin/site_space.hpp"
#include "netkin/trajectory.hpp"

namespace netkin {

// N agents (x_i, v_i) with immutable positions; the state of the exact
// jump-process dynamics.
class ParticleEnsemble {
 public:
  ParticleEnsemble(SiteSpace space, std::vector<std::uint32_t> sites, std::size_t state_dim,
                   std::vector<double> states)
      : space_(std::move(space)),
        sites_(std::move(sites)),
        dim_(state_dim),
        states_(std::move(states)) {
    if (sites_.empty()) throw ArgumentError("ParticleEnsemble: needs at least one agent");
    if (dim_ == 0) throw ArgumentError("ParticleEnsemble: state_dim must be positive");
    if (states_.size() != sites_.size() * dim_)
      throw DimensionError("ParticleEnsemble: states must be N x state_dim");
    for (std::uint32_t s : sites_) space_->check_site(s);
  }

  // agents_per_site copies of V0(x) at every site: a monokinetic ensemble.
  static ParticleEnsemble monokinetic(const Field& v0, std::size_t agents_per_site) {
    if (v0.empty() || agents_per_site == 0)
      throw ArgumentError("ParticleEnsemble::monokinetic: empty field or zero agents");
    std::vector<std::uint32_t> sites;
    std::vector<double> states;
    for (std::size_t s = 0; s < v0.sites(); ++s) {
      for (std::size_t k = 0; k < agents_per_site; ++k) {
        sites.push_back(static_cast<std::uint32_t>(s));
        auto row = v0.at(s);
        states.insert(states.end(), row.begin(), row.end());
      }
    }
    return ParticleEnsemble(v0.space(), std::move(sites), v0.dim(), std::move(states));
  }

  std::size_t size() const { return sites_.size(); }
  std::size_t state_dim() const { return dim_; }
  const SiteSpace& space() const { return *space_; }
  std::uint32_t site(std::size_t i) const { return sites_[i]; }
  const std::vector<std::uint32_t>& sites() const { return sites_; }

  std::span<const double> state(std::size_t i) const { return {states_.data() + i * dim_, dim_}; }
  std::span<double> state(std::size_t i) { return {states_.data() + i * dim_, dim_}; }
  std::vector<double>& states() { return states_; }
  const std::vector<double>& states() const { return states_; }

 private:
  std::optional<SiteSpace> space_;
  std::vector<std::uint32_t> sites_;
  std::size_t dim_;
  std::vector<double> states_;
};

struct EnsembleObservables {
  Field eta;         // per-site agent counts normalized to a probability
  Field mean_state;  // per-site mean state; NaN on empty sites
  double quad_variation = 0.0;
};

// Spatial marginal, per-site means and the site-conditional quadratic
// variation V = sum_i |v_i - mean(x_i)|^2 / N (Euclidean state norm).
inline EnsembleObservables ensemble_observables(const ParticleEnsemble& ensemble,
                                                const SiteSpace& binning) {
  const std::size_t n = binning.size();
  const std::size_t dim = ensemble.state_dim();
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    if (ensemble.site(i) >= n) throw DomainError("ensemble_observables: agent outside binning");

  std::vector<double> counts(n, 0.0);
  Field mean(binning, dim, 0.0);
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const std::uint32_t s = ensemble.site(i);
    counts[s] += 1.0;
    auto v = ensemble.state(i);
    for (std::size_t c = 0; c < dim; ++c) mean(s, c) += v[c];
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (counts[s] > 0.0) {
      for (std::size_t c = 0; c < dim; ++c) mean(s, c) /= counts[s];
    } else {
      for (std::size_t c = 0; c < dim; ++c) mean(s, c) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  double qv = 0.0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const std::uint32_t s = ensemble.site(i);
    auto v = ensemble.state(i);
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = v[c] - mean(s, c);
      qv += d * d;
    }
  }
  qv /= static_cast<double>(ensemble.size());

  std::vector<double> eta = counts;
  for (double& x : eta) x /= static_cast<double>(ensemble.size());
  return {Field::scalar(binning, std::move(eta)), std::move(mean), qv};
}

// d_p to the profile V: (sum_i |v_i - V(x_i)|^p / N)^(1/p), the explicit
// Wasserstein distance of the empirical measure to the concentrated one.
inline double dp_distance(const ParticleEnsemble& ensemble, const Field& v, double p) {
  if (!(p >= 1.0)) throw ArgumentError("dp_distance: order p must be >= 1");
  if (v.empty() || v.dim() != ensemble.state_dim())
    throw DimensionError("dp_distance: profile dim must match the ensemble state dim");
  double acc = 0.0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const std::uint32_t s = ensemble.site(i);
    if (s >= v.sites()) throw DomainError("dp_distance: agent outside the profile's site space");
    auto vi = ensemble.state(i);
    auto pr = v.at(s);
    double norm2 = 0.0;
    for (std::size_t c = 0; c < vi.size(); ++c) {
      if (!std::isfinite(pr[c])) throw DomainError("dp_distance: profile undefined at an occupied site");
      const double d = vi[c] - pr[c];
      norm2 += d * d;
    }
    acc += std::pow(std::sqrt(norm2), p);
  }
  return std::pow(acc / static_cast<double>(ensemble.size()), 1.0 / p);
}

struct MasterOptions {
  double t_end = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> snapshot_times;
  bool record_events = false;
  // Snapshots keep full particle states only while N stays at or below this.
  std::size_t store_states_limit = 10000;
  double admissible_tol = 1e-9;
};

namespace detail {

// Rates depend on positions only, so ordered site pairs carry static weights
// w(s,t)/N * (number of ordered agent pairs on (s,t)); agents within the pair
// are then uniform. Exact and O(S^2) memory instead of O(N^2).
struct PairSampler {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> site_pairs;
  std::vector<std::vector<std::uint32_t>> by_site;
  std::optional<AliasTable> alias;
  double total_rate = 0.0;

  PairSampler(const ParticleEnsemble& ensemble, const Kernel& kernel) {
    const std::size_t n_sites = ensemble.space().size();
    const double n = static_cast<double>(ensemble.size());
    by_site.assign(n_sites, {});
    for (std::size_t i = 0; i < ensemble.size(); ++i)
      by_site[ensemble.site(i)].push_back(static_cast<std::uint32_t>(i));

    std::vector<std::uint32_t> occupied;
    for (std::size_t s = 0; s < n_sites; ++s)
      if (!by_site[s].empty()) occupied.push_back(static_cast<std::uint32_t>(s));

    std::vector<double> weights;
    for (std::uint32_t s : occupied) {
      for (std::uint32_t t : occupied) {
        const double ns = static_cast<double>(by_site[s].size());
        const double nt = static_cast<double>(by_site[t].size());
        const double pairs = (s == t) ? ns * (ns - 1.0) : ns * nt;
        if (pairs <= 0.0) continue;
        const double w = kernel.eval(s, t);
        if (w <= 0.0) continue;
        site_pairs.emplace_back(s, t);
        weights.push_back(w / n * pairs);
      }
    }
    if (!weights.empty()) {
      alias.emplace(std::span<const double>(weights));
      total_rate = alias->total_weight();
    }
  }

  // Draw an ordered agent pair (active, passive), i != j.
  std::pair<std::uint32_t, std::uint32_t> sample(Rng& rng) const {
    const auto [s, t] = site_pairs[alias->sample(rng)];
    const auto& as = by_site[s];
    const auto& at = by_site[t];
    const std::size_t ii = rng.uniform_index(as.size());
    std::size_t jj;
    if (s == t) {
      jj = rng.uniform_index(at.size() - 1);
      if (jj >= ii) ++jj;
    } else {
      jj = rng.uniform_index(at.size());
    }
    return {as[ii], at[jj]};
  }
};

inline void check_admissible(const InteractionLaw& law, std::span<const double> v, double tol,
                             double t) {
  if (!law.admissible(v, tol))
    throw StateViolationError("simulate_master: state left the admissible set at t = " +
                              std::to_string(t));
}

}  // namespace detail

// Exact realization of the N-agent dynamics: every ordered pair (i, j) fires
// at rate w(x_i, x_j)/N; at a firing the active agent i draws an action and
// states jump by (a, b). Event selection is an exponential race over the
// static total rate (positions never move). Deterministic given the seed.
inline Trajectory simulate_master(const ParticleEnsemble& initial, const InteractionLaw& law,
                                  const Kernel& kernel, const MasterOptions& opt) {
  if (!(opt.t_end > 0.0)) throw ArgumentError("simulate_master: t_end must be positive");
  require_same_space(initial.space(), kernel.space(), "simulate_master");
  if (initial.state_dim() != law.state_dim())
    throw DimensionError("simulate_master: ensemble state dim must match the law");
  detail::validate_stops(opt.snapshot_times, opt.t_end);

  ParticleEnsemble ensemble = initial;
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    detail::check_admissible(law, ensemble.state(i), opt.admissible_tol, 0.0);

  Trajectory traj(ensemble.space(), law.component_names(), opt.seed);
  const bool keep_states = ensemble.size() <= opt.store_states_limit;
  auto snapshot = [&](double t) {
    EnsembleObservables obs = ensemble_observables(ensemble, ensemble.space());
    TrajectoryPoint pt;
    pt.t = t;
    pt.state = std::move(obs.mean_state);
    pt.eta = std::move(obs.eta);
    pt.quad_variation = obs.quad_variation;
    if (keep_states) pt.particle_states = ensemble.states();
    traj.add_point(std::move(pt));
  };

  Rng rng(opt.seed);
  const std::size_t dim = law.state_dim();
  std::vector<double> jump_a(dim), jump_b(dim);

  std::size_t next_snap = 0;
  auto flush_snapshots_before = [&](double horizon) {
    while (next_snap < opt.snapshot_times.size() && opt.snapshot_times[next_snap] <= horizon) {
      snapshot(opt.snapshot_times[next_snap]);
      ++next_snap;
    }
  };

  if (ensemble.size() >= 2) {
    const detail::PairSampler sampler(ensemble, kernel);
    if (sampler.total_rate > 0.0) {
      double t = 0.0;
      while (true) {
        const double wait = rng.exponential(sampler.total_rate);
        const double te = t + wait;
        // State is right-continuous: snapshots strictly before the next event
        // (and at most t_end) see the current states.
        flush_snapshots_before(std::min(std::nextafter(te, 0.0), opt.t_end));
        if (te > opt.t_end) break;
        const auto [i, j] = sampler.sample(rng);
        const int action = law.sample(ensemble.state(i), ensemble.state(j), rng, jump_a, jump_b);
        {
          auto vi = ensemble.state(i);
          auto vj = ensemble.state(j);
          for (std::size_t c = 0; c < dim; ++c) vi[c] += jump_a[c];
          for (std::size_t c = 0; c < dim; ++c) vj[c] += jump_b[c];
          detail::check_admissible(law, vi, opt.admissible_tol, te);
          detail::check_admissible(law, vj, opt.admissible_tol, te);
        }
        if (opt.record_events) traj.events().push_back({te, i, j, action});
        t = te;
      }
    }
  }
  flush_snapshots_before(opt.t_end);
  return traj;
}

inline Trajectory simulate_master(const ParticleEnsemble& initial, const InteractionLaw& law,
                                  const Kernel& kernel, double t_end, std::uint64_t seed,
                                  std::vector<double> snapshot_times) {
  MasterOptions opt;
  opt.t_end = t_end;
  opt.seed = seed;
  opt.snapshot_times = std::move(snapshot_times);
  return simulate_master(initial, law, kernel, opt);
}

}  // namespace netkin
