#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "netkin/common.hpp"
#include "netkin/rng.hpp"

namespace netkin {

// Pairwise interaction law nu: the distribution of state jumps (a, b) for an
// ordered (active, passive) encounter, plus moment oracles used by the
// mean-field kernels. For active/passive laws a is identically zero — the
// active agent never changes its own state.
//
// Argument convention everywhere: the first state span is the ACTIVE agent,
// the second the PASSIVE one. Laws are immutable and shareable across threads.
class InteractionLaw {
 public:
  virtual ~InteractionLaw() = default;

  virtual std::size_t state_dim() const = 0;

  virtual std::vector<std::string> component_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < state_dim(); ++i) names.push_back("v" + std::to_string(i + 1));
    return names;
  }

  // Draw a jump pair into a (active's own jump) and b (passive's jump).
  // Returns a law-specific action id for event logs, or -1.
  virtual int sample(std::span<const double> active, std::span<const double> passive, Rng& rng,
                     std::span<double> a, std::span<double> b) const = 0;

  virtual bool has_mean_oracles() const { return false; }
  virtual void mean_a(std::span<const double> /*active*/, std::span<const double> /*passive*/,
                      std::span<double> /*out*/) const {
    throw UnsupportedError("InteractionLaw: mean_a oracle not available");
  }
  virtual void mean_b(std::span<const double> /*active*/, std::span<const double> /*passive*/,
                      std::span<double> /*out*/) const {
    throw UnsupportedError("InteractionLaw: mean_b oracle not available");
  }

  virtual bool has_second_moment_oracles() const { return false; }
  // E[a (x) a] and E[b (x) b] as dense state_dim x state_dim matrices.
  virtual void second_moment_a(std::span<const double> /*active*/,
                               std::span<const double> /*passive*/, Eigen::MatrixXd& /*out*/) const {
    throw UnsupportedError("InteractionLaw: second_moment_a oracle not available");
  }
  virtual void second_moment_b(std::span<const double> /*active*/,
                               std::span<const double> /*passive*/, Eigen::MatrixXd& /*out*/) const {
    throw UnsupportedError("InteractionLaw: second_moment_b oracle not available");
  }

  // Jump scale metadata for rescaled mean-field limits: mean jumps are
  // O(jump_scale^scale_exponent) and the rescaled drift divides it out.
  virtual bool has_jump_scale() const { return false; }
  virtual double jump_scale() const { return 1.0; }
  virtual double scale_exponent() const { return 1.0; }

  // Admissible state set (e.g. the simplex). repair() fixes rounding-scale
  // drift after approximate (SDE) steps; the exact simulator never repairs.
  virtual bool admissible(std::span<const double> /*v*/, double /*tol*/) const { return true; }
  virtual void repair(std::span<double> /*v*/) const {}
};

}  // namespace netkin
