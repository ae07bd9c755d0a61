#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "netkin/common.hpp"
#include "netkin/field.hpp"
#include "netkin/site_space.hpp"

namespace netkin {

// Even profile for convolution kernels w(x, x~) = k(d(x, x~)/eps) / eps,
// evaluated at s = d/eps; support is the half-width beyond which k vanishes.
struct ConvolutionProfile {
  std::function<double(double)> k;
  double support = 1.0;
};

// Interaction-rate kernel w(x, x~) >= 0. On grids the kernel is radial in the
// periodic distance; on networks it is a dense weight matrix. Immutable.
class Kernel {
 public:
  static Kernel radial(SiteSpace grid, std::function<double(double)> of_distance) {
    if (!grid.is_grid()) throw ArgumentError("Kernel::radial: requires a periodic grid");
    auto impl = std::make_shared<Impl>();
    impl->space = std::move(grid);
    impl->radial = std::move(of_distance);
    impl->symmetric = true;
    return Kernel(std::move(impl));
  }

  // Triangular kernel amp * (x0 - d)_+ in the periodic distance d.
  static Kernel triangle(SiteSpace grid, double x0, double amp) {
    if (!(x0 > 0.0) || !(amp >= 0.0))
      throw ArgumentError("Kernel::triangle: x0 must be positive, amp nonnegative");
    return radial(std::move(grid), [x0, amp](double d) { return amp * std::max(x0 - d, 0.0); });
  }

  static Kernel convolution(SiteSpace grid, ConvolutionProfile profile, double eps) {
    if (!(eps > 0.0)) throw ArgumentError("Kernel::convolution: eps must be positive");
    if (!profile.k || !(profile.support > 0.0))
      throw ArgumentError("Kernel::convolution: profile needs a function and positive support");
    auto impl = std::make_shared<Impl>();
    impl->space = std::move(grid);
    if (!impl->space->is_grid())
      throw ArgumentError("Kernel::convolution: requires a periodic grid");
    impl->symmetric = true;
    impl->convolutional = true;
    impl->eps = eps;
    impl->profile = std::move(profile);
    auto k = impl->profile.k;
    impl->radial = [k, eps](double d) { return k(d / eps) / eps; };
    return Kernel(std::move(impl));
  }

  static Kernel constant(SiteSpace space, double rate) {
    if (!(rate >= 0.0)) throw ArgumentError("Kernel::constant: rate must be nonnegative");
    if (space.is_grid()) return radial(std::move(space), [rate](double) { return rate; });
    const std::size_t n = space.size();
    return dense(std::move(space), std::vector<std::vector<double>>(n, std::vector<double>(n, rate)));
  }

  static Kernel dense(SiteSpace network, const std::vector<std::vector<double>>& w) {
    if (network.is_grid()) throw ArgumentError("Kernel::dense: requires a network site space");
    const std::size_t n = network.size();
    if (w.size() != n) throw DimensionError("Kernel::dense: matrix rows must match node count");
    auto impl = std::make_shared<Impl>();
    impl->space = std::move(network);
    impl->matrix.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i].size() != n) throw DimensionError("Kernel::dense: matrix must be square");
      for (std::size_t j = 0; j < n; ++j) {
        if (!(w[i][j] >= 0.0)) throw ArgumentError("Kernel::dense: weights must be nonnegative");
        impl->matrix[i * n + j] = w[i][j];
      }
    }
    impl->symmetric = true;
    for (std::size_t i = 0; i < n && impl->symmetric; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::abs(impl->matrix[i * n + j] - impl->matrix[j * n + i]) > 1e-12) {
          impl->symmetric = false;
          break;
        }
    return Kernel(std::move(impl));
  }

  const SiteSpace& space() const { return *impl_->space; }
  bool symmetric() const { return impl_->symmetric; }
  bool convolutional() const { return impl_->convolutional; }

  double scale() const {
    require_convolutional();
    return impl_->eps;
  }

  const ConvolutionProfile& profile() const {
    require_convolutional();
    return impl_->profile;
  }

  double eval(std::size_t a, std::size_t b) const {
    const SiteSpace& sp = *impl_->space;
    sp.check_site(a);
    sp.check_site(b);
    double w;
    if (!impl_->matrix.empty()) {
      w = impl_->matrix[a * sp.size() + b];
    } else {
      w = impl_->radial(sp.distance(a, b));
    }
    if (!(w >= 0.0)) throw ArgumentError("Kernel: evaluation rule returned a negative rate");
    return w;
  }

  // Row-major size()^2 weight table; solvers build this once and index it.
  std::vector<double> materialize() const {
    const std::size_t n = impl_->space->size();
    if (!impl_->matrix.empty()) return impl_->matrix;
    std::vector<double> out(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] = eval(i, j);
    return out;
  }

 private:
  struct Impl {
    std::optional<SiteSpace> space;
    std::function<double(double)> radial;  // grids
    std::vector<double> matrix;            // networks, row-major
    bool symmetric = false;
    bool convolutional = false;
    double eps = 0.0;
    ConvolutionProfile profile;
  };

  explicit Kernel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  void require_convolutional() const {
    if (!impl_->convolutional)
      throw UnsupportedError("Kernel: operation requires a convolution kernel");
  }

  std::shared_ptr<const Impl> impl_;
};

inline double eval_kernel(const Kernel& kernel, std::size_t a, std::size_t b) {
  return kernel.eval(a, b);
}

// kappa(x) = integral of w(x, x~) rho(x~): midpoint rule h*sum on grids, plain
// matrix-vector product on networks. With rho == 1 this is alpha(x).
inline Field kernel_mass(const Kernel& kernel, const Field& density) {
  if (density.empty() || density.dim() != 1)
    throw DimensionError("kernel_mass: density must be a scalar field");
  require_same_space(kernel.space(), density.space(), "kernel_mass");
  if (!density.nonnegative()) throw ArgumentError("kernel_mass: density must be nonnegative");
  const std::size_t n = kernel.space().size();
  const double qw = kernel.space().quadrature_weight();
  const std::vector<double> w = kernel.materialize();
  Field out(kernel.space(), 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += w[i * n + j] * density(j);
    out(i) = qw * acc;
  }
  return out;
}

inline Field kernel_mass(const Kernel& kernel) {
  return kernel_mass(kernel, Field::constant(kernel.space(), 1.0));
}

// Nonlocal Laplacian (Delta_w phi)(x) = integral of w(x, x~)(phi(x~) - phi(x)),
// applied componentwise. Constants are annihilated exactly: every summand is
// an exact floating-point zero.
inline Field nonlocal_laplacian(const Kernel& kernel, const Field& phi) {
  if (phi.empty()) throw DimensionError("nonlocal_laplacian: empty field");
  require_same_space(kernel.space(), phi.space(), "nonlocal_laplacian");
  const std::size_t n = kernel.space().size();
  const std::size_t dim = phi.dim();
  const double qw = kernel.space().quadrature_weight();
  const std::vector<double> w = kernel.materialize();
  Field out(kernel.space(), dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = w[i * n + j];
      if (wij == 0.0) continue;
      for (std::size_t c = 0; c < dim; ++c) out(i, c) += wij * (phi(j, c) - phi(i, c));
    }
    for (std::size_t c = 0; c < dim; ++c) out(i, c) *= qw;
  }
  return out;
}

// Second moment C of the convolution profile and the induced diffusion scale
// sigma = sqrt(C) * eps. C is computed by midpoint quadrature over the support.
inline std::pair<double, double> local_limit_coefficient(const Kernel& kernel) {
  const ConvolutionProfile& pr = kernel.profile();  // throws unless convolutional
  const double eps = kernel.scale();
  const std::size_t cells = 200000;
  const double a = -pr.support, b = pr.support;
  const double dx = (b - a) / static_cast<double>(cells);
  double c = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    const double s = a + (static_cast<double>(i) + 0.5) * dx;
    c += s * s * pr.k(s);
  }
  c *= dx;
  return {c, std::sqrt(c) * eps};
}

}  // namespace netkin
