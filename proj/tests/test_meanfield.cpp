#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "netkin/dialect.hpp"
#include "netkin/meanfield.hpp"
#include "netkin/particle.hpp"
#include "netkin/stats.hpp"
#include "test_util.hpp"

using namespace netkin;

namespace {

// Test-only laws used to isolate pieces of the mean-field machinery.

// Linear consensus: b pulls the passive state toward the active one.
class ConsensusLaw final : public InteractionLaw {
 public:
  ConsensusLaw(std::size_t dim, double c) : dim_(dim), c_(c) {}
  std::size_t state_dim() const override { return dim_; }
  int sample(std::span<const double>, std::span<const double>, Rng&, std::span<double> a,
             std::span<double> b) const override {
    for (double& x : a) x = 0.0;
    for (double& x : b) x = 0.0;
    return -1;
  }
  bool has_mean_oracles() const override { return true; }
  void mean_a(std::span<const double>, std::span<const double>,
              std::span<double> out) const override {
    for (double& x : out) x = 0.0;
  }
  void mean_b(std::span<const double> active, std::span<const double> passive,
              std::span<double> out) const override {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = c_ * (active[i] - passive[i]);
  }
  bool has_second_moment_oracles() const override { return true; }
  void second_moment_a(std::span<const double>, std::span<const double>,
                       Eigen::MatrixXd& out) const override {
    out.setZero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  }
  void second_moment_b(std::span<const double>, std::span<const double>,
                       Eigen::MatrixXd& out) const override {
    out.setZero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  }

 private:
  std::size_t dim_;
  double c_;
};

// Pure noise: zero mean jumps, isotropic second moment c * I on the passive side.
class IsotropicNoiseLaw final : public InteractionLaw {
 public:
  IsotropicNoiseLaw(std::size_t dim, double c) : dim_(dim), c_(c) {}
  std::size_t state_dim() const override { return dim_; }
  int sample(std::span<const double>, std::span<const double>, Rng&, std::span<double> a,
             std::span<double> b) const override {
    for (double& x : a) x = 0.0;
    for (double& x : b) x = 0.0;
    return -1;
  }
  bool has_mean_oracles() const override { return true; }
  void mean_a(std::span<const double>, std::span<const double>,
              std::span<double> out) const override {
    for (double& x : out) x = 0.0;
  }
  void mean_b(std::span<const double>, std::span<const double>,
              std::span<double> out) const override {
    for (double& x : out) x = 0.0;
  }
  bool has_second_moment_oracles() const override { return true; }
  void second_moment_a(std::span<const double>, std::span<const double>,
                       Eigen::MatrixXd& out) const override {
    out.setZero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  }
  void second_moment_b(std::span<const double>, std::span<const double>,
                       Eigen::MatrixXd& out) const override {
    out = c_ * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim_),
                                         static_cast<Eigen::Index>(dim_));
  }

 private:
  std::size_t dim_;
  double c_;
};

}  // namespace

TEST(DriftKernelOp, DialectExample) {
  const SiteSpace net = SiteSpace::network(2);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const DialectLaw law(2, 2.0, 0.1);
  const std::vector<double> v = {0.5, 0.5};   // field point (passive role)
  const std::vector<double> tv = {0.6, 0.4};  // partner (active role)
  const std::vector<double> k = drift_kernel(kernel, law, 0, v, 1, tv);
  EXPECT_NEAR(k[0], 0.36 / 0.52 - 0.5, 1e-12);
  EXPECT_NEAR(k[1], 0.16 / 0.52 - 0.5, 1e-12);
}

TEST(DriftKernelOp, VanishesWithKernelAndWithoutMeanB) {
  const SiteSpace net = SiteSpace::network(2);
  const Kernel zero = Kernel::dense(net, {{0.0, 0.0}, {0.0, 0.0}});
  const DialectLaw dialect(2, 2.0, 0.1);
  const std::vector<double> v = {0.5, 0.5}, tv = {0.6, 0.4};
  for (double x : drift_kernel(zero, dialect, 0, v, 1, tv)) EXPECT_EQ(x, 0.0);

  // active/passive law whose passive mean vanishes: K == 0
  const Kernel ones = Kernel::constant(net, 1.0);
  const ConsensusLaw still(2, 0.0);
  for (double x : drift_kernel(ones, still, 0, v, 1, tv)) EXPECT_EQ(x, 0.0);
}

TEST(DriftKernelOp, RequiresMeanOracles) {
  const SiteSpace net = SiteSpace::network(1);
  const Kernel kernel = Kernel::constant(net, 1.0);
  class NoOracleLaw final : public InteractionLaw {
   public:
    std::size_t state_dim() const override { return 1; }
    int sample(std::span<const double>, std::span<const double>, Rng&, std::span<double>,
               std::span<double>) const override {
      return -1;
    }
  } law;
  EXPECT_THROW(DriftKernel(kernel, law), UnsupportedError);
}

TEST(DiffusionKernelOp, VertexAndZeroKernel) {
  const SiteSpace net = SiteSpace::network(2);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const DialectLaw law(2, 2.0, 0.1);
  const std::vector<double> e1 = {1.0, 0.0};
  const Eigen::MatrixXd a = diffusion_kernel(kernel, law, 0, e1, 1, e1);
  EXPECT_NEAR(a.norm(), 0.0, 1e-15);

  const Kernel zero = Kernel::dense(net, {{0.0, 0.0}, {0.0, 0.0}});
  const std::vector<double> v = {0.5, 0.5};
  EXPECT_EQ(diffusion_kernel(zero, law, 0, v, 1, v).norm(), 0.0);
}

// Covariance kernel against a brute-force Monte Carlo estimate of E[b (x) b].
TEST(DiffusionKernelOp, MonteCarloOracle) {
  const SiteSpace net = SiteSpace::network(2);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const double gamma = 0.1;
  const DialectLaw law(2, 1.0, gamma);  // alpha = 1: identity choice map
  const std::vector<double> v = {0.5, 0.5}, tv = {0.5, 0.5};

  const int samples = 1000000;
  Rng rng(17);
  std::vector<double> a(2), b(2);
  Eigen::MatrixXd mc = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd mc2 = Eigen::MatrixXd::Zero(2, 2);  // second moment of b_r*b_c for SEs
  for (int s = 0; s < samples; ++s) {
    law.sample(tv, v, rng, a, b);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        mc(r, c) += b[r] * b[c];
        mc2(r, c) += b[r] * b[c] * b[r] * b[c];
      }
  }
  mc /= samples;
  mc2 /= samples;

  const Eigen::MatrixXd analytic = diffusion_kernel(kernel, law, 0, v, 1, tv);
  // A = (1/2) w (E[a@a] + E[b@b]) and a == 0, so E[b@b] = 2 A.
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const double se = std::sqrt(std::max(mc2(r, c) - mc(r, c) * mc(r, c), 0.0) / samples);
      EXPECT_NEAR(2.0 * analytic(r, c), mc(r, c), 3.0 * se + 1e-12);
    }
  // frozen value of the diagonal: (1/2)(gamma/(1+gamma))^2 * 0.25 * 2 * 0.5
  const double eps = gamma / (1.0 + gamma);
  EXPECT_NEAR(analytic(0, 0), 0.5 * eps * eps * 0.25, 1e-12);
}

TEST(DiffusionKernelOp, PsdAtRandomStates) {
  const SiteSpace net = SiteSpace::network(2);
  const Kernel kernel = Kernel::constant(net, 0.7);
  const DialectLaw law(3, 2.0, 0.2);
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(3), tv(3);
    double sv = 0.0, stv = 0.0;
    for (int c = 0; c < 3; ++c) {
      v[c] = rng.uniform01();
      tv[c] = rng.uniform01();
      sv += v[c];
      stv += tv[c];
    }
    for (int c = 0; c < 3; ++c) {
      v[c] /= sv;
      tv[c] /= stv;
    }
    const Eigen::MatrixXd a = diffusion_kernel(kernel, law, 0, v, 1, tv);
    EXPECT_NEAR((a - a.transpose()).norm(), 0.0, 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(SolveCharacteristics, ZeroDriftKeepsStates) {
  const SiteSpace net = SiteSpace::network(2);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const ConsensusLaw law(2, 0.0);
  const ParticleEnsemble ens(net, {0, 1}, 2, {0.3, 0.7, 0.8, 0.2});
  const DriftKernel drift(kernel, law);
  const Trajectory traj = solve_characteristics(ens, drift, 1.0, 0.1, {1.0});
  EXPECT_EQ(traj.back().particle_states, ens.states());
}

// Identity choice map at one site: dV_i/dt = mean(V) - V_i, so the mean is
// conserved and every state contracts exponentially toward it.
TEST(SolveCharacteristics, LinearConsensusOracle) {
  const SiteSpace net = SiteSpace::network(1);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const DialectLaw law(2, 1.0, 0.1);  // alpha = 1
  std::vector<double> states = {0.9, 0.1, 0.5, 0.5, 0.2, 0.8, 0.4, 0.6};
  const ParticleEnsemble ens(net, {0, 0, 0, 0}, 2, states);
  const DriftKernel drift(kernel, law);
  const double t_end = 1.5;
  const Trajectory traj = solve_characteristics(ens, drift, t_end, 0.01, {t_end});

  const double mean0 = (0.9 + 0.5 + 0.2 + 0.4) / 4.0;
  const auto& final_states = traj.back().particle_states;
  double mean_t = 0.0;
  for (int i = 0; i < 4; ++i) mean_t += final_states[2 * i] / 4.0;
  EXPECT_NEAR(mean_t, mean0, 1e-10);
  const double decay = std::exp(-t_end);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(final_states[2 * i], mean0 + (states[2 * i] - mean0) * decay, 1e-6);
}

// Single sample with self-interaction: dV/dt = p(V) - V, checked against an
// independent refined-step integration.
TEST(SolveCharacteristics, SelfConformityAgainstRefinedOracle) {
  const SiteSpace net = SiteSpace::network(1);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const DialectLaw law(2, 2.0, 0.1);
  const ParticleEnsemble ens(net, {0}, 2, {0.6, 0.4});
  const DriftKernel drift(kernel, law);
  const double dt = 0.05;
  const Trajectory traj = solve_characteristics(ens, drift, 2.0, dt, {2.0});

  auto rhs = [](double, const std::vector<double>& y) {
    const double s = y[0] * y[0] + y[1] * y[1];
    return std::vector<double>{y[0] * y[0] / s - y[0], y[1] * y[1] / s - y[1]};
  };
  const std::vector<double> ref = test_util::rk4_reference({0.6, 0.4}, rhs, 2.0, dt / 10.0);
  EXPECT_LT(test_util::max_abs_diff(traj.back().particle_states, ref), 1e-7);
  EXPECT_GT(traj.back().particle_states[0], 0.9);  // heading to the e1 corner
}

TEST(SolveCharacteristics, ConservesMeanForSymmetricAntisymmetricCase) {
  // alpha = 1 makes mean_a + mean_b antisymmetric under argument swap; with a
  // symmetric kernel the global mean is a conserved quantity.
  const SiteSpace grid = SiteSpace::periodic_grid(8);
  const Kernel kernel = Kernel::triangle(grid, 0.3, 2.0);
  const DialectLaw law(3, 1.0, 0.2);
  Rng rng(77);
  std::vector<std::uint32_t> sites;
  std::vector<double> states;
  for (int i = 0; i < 32; ++i) {
    sites.push_back(static_cast<std::uint32_t>(i % 8));
    double s = 0.0;
    std::vector<double> v(3);
    for (auto& x : v) {
      x = rng.exponential(1.0);
      s += x;
    }
    for (auto& x : v) states.push_back(x / s);
  }
  const ParticleEnsemble ens(grid, sites, 3, states);
  const DriftKernel drift(kernel, law);
  const Trajectory traj = solve_characteristics(ens, drift, 2.0, 0.02, {2.0});

  std::vector<double> mean0(3, 0.0), mean1(3, 0.0);
  for (int i = 0; i < 32; ++i)
    for (int c = 0; c < 3; ++c) {
      mean0[c] += states[i * 3 + c] / 32.0;
      mean1[c] += traj.back().particle_states[i * 3 + c] / 32.0;
    }
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(mean0[c], mean1[c], 1e-8);
}

TEST(SolveMonokinetic, FixedPointsAndSingleAtomConsistency) {
  const SiteSpace grid = SiteSpace::periodic_grid(6);
  const Kernel kernel = Kernel::triangle(grid, 0.4, 1.0);
  const DialectLaw law(2, 2.0, 0.1);
  const DriftKernel drift(kernel, law);

  // spatially constant V0 with p(V0) = V0 (uniform state) is stationary
  Field uniform(grid, 2, 0.5);
  const Field eta = Field::constant(grid, 1.0);
  const Trajectory traj = solve_monokinetic(eta, uniform, drift, 1.0, 0.05, {1.0});
  for (std::size_t s = 0; s < grid.size(); ++s) {
    EXPECT_NEAR(traj.back().state(s, 0), 0.5, 1e-12);
    EXPECT_NEAR(traj.back().state(s, 1), 0.5, 1e-12);
  }

  // a single atom reduces to the single-site characteristics ODE
  const SiteSpace one = SiteSpace::network(1);
  const Kernel k1 = Kernel::constant(one, 1.0);
  const DriftKernel d1(k1, law);
  Field v0(one, 2, 0.0);
  v0(0, 0) = 0.6;
  v0(0, 1) = 0.4;
  const Trajectory mono = solve_monokinetic(Field::constant(one, 1.0), v0, d1, 2.0, 0.05, {2.0});
  const ParticleEnsemble atom(one, {0}, 2, {0.6, 0.4});
  const Trajectory chars = solve_characteristics(atom, d1, 2.0, 0.05, {2.0});
  EXPECT_NEAR(mono.back().state(0, 0), chars.back().particle_states[0], 1e-12);
}

TEST(SolveMonokinetic, MatchesCharacteristicsAtQuadratureNodes) {
  const SiteSpace grid = SiteSpace::periodic_grid(16);
  ConvolutionProfile triangle{[](double s) { return std::max(1.0 - std::abs(s), 0.0); }, 1.0};
  const Kernel kernel = Kernel::convolution(grid, triangle, 0.2);
  const DialectLaw law(2, 2.0, 0.1);
  const DriftKernel drift(kernel, law);

  Field v0(grid, 2, 0.0);
  for (std::size_t s = 0; s < grid.size(); ++s) {
    v0(s, 0) = 0.5 + 0.3 * std::sin(2.0 * M_PI * grid.position(s));
    v0(s, 1) = 1.0 - v0(s, 0);
  }
  const Field eta = Field::constant(grid, 1.0);
  const Trajectory mono = solve_monokinetic(eta, v0, drift, 1.0, 0.02, {1.0});
  const ParticleEnsemble nodes = ParticleEnsemble::monokinetic(v0, 1);
  const Trajectory chars = solve_characteristics(nodes, drift, 1.0, 0.02, {1.0});
  double worst = 0.0;
  for (std::size_t s = 0; s < grid.size(); ++s)
    for (std::size_t c = 0; c < 2; ++c)
      worst = std::max(worst,
                       std::abs(mono.back().state(s, c) - chars.back().particle_states[s * 2 + c]));
  EXPECT_LT(worst, 1e-6);
}

TEST(SolveMonokinetic, TranslationEquivariance) {
  const SiteSpace grid = SiteSpace::periodic_grid(20);
  ConvolutionProfile triangle{[](double s) { return std::max(1.0 - std::abs(s), 0.0); }, 1.0};
  const Kernel kernel = Kernel::convolution(grid, triangle, 0.15);
  const DialectLaw law(2, 2.0, 0.1);
  const DriftKernel drift(kernel, law);
  const Field eta = Field::constant(grid, 1.0);

  Field v0(grid, 2, 0.0);
  for (std::size_t s = 0; s < grid.size(); ++s) {
    v0(s, 0) = 0.5 + 0.25 * std::sin(2.0 * M_PI * grid.position(s)) +
               0.1 * std::cos(4.0 * M_PI * grid.position(s));
    v0(s, 1) = 1.0 - v0(s, 0);
  }
  const std::size_t shift = 7;
  Field shifted(grid, 2, 0.0);
  for (std::size_t s = 0; s < grid.size(); ++s)
    for (std::size_t c = 0; c < 2; ++c) shifted((s + shift) % grid.size(), c) = v0(s, c);

  const Trajectory a = solve_monokinetic(eta, v0, drift, 0.8, 0.02, {0.8});
  const Trajectory b = solve_monokinetic(eta, shifted, drift, 0.8, 0.02, {0.8});
  double worst = 0.0;
  for (std::size_t s = 0; s < grid.size(); ++s)
    for (std::size_t c = 0; c < 2; ++c)
      worst = std::max(worst,
                       std::abs(a.back().state(s, c) - b.back().state((s + shift) % grid.size(), c)));
  EXPECT_LT(worst, 1e-10);
}

TEST(FokkerPlanck, ZeroNoiseMatchesCharacteristics) {
  const SiteSpace net = SiteSpace::network(1);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const ConsensusLaw law(2, 0.5);  // zero second moments
  std::vector<double> states = {0.9, 0.1, 0.2, 0.8, 0.6, 0.4, 0.3, 0.7};
  const ParticleEnsemble ens(net, {0, 0, 0, 0}, 2, states);
  const DriftKernel drift(kernel, law);
  const DiffusionKernel diffusion(kernel, law);
  const double dt = 0.005;
  const Trajectory fp = simulate_fokker_planck_particles(ens, drift, diffusion, 1.0, dt, 5, {1.0});
  const Trajectory ch = solve_characteristics(ens, drift, 1.0, dt, {1.0});
  // Euler vs RK4: agreement to O(dt)
  EXPECT_LT(test_util::max_abs_diff(fp.back().particle_states, ch.back().particle_states), 10.0 * dt);
}

TEST(FokkerPlanck, BrownianVarianceSlope) {
  const SiteSpace net = SiteSpace::network(1);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const double c = 0.02;
  const IsotropicNoiseLaw law(2, c);  // A = (c/2) I, so Var grows at 2 tr A = 2c
  const std::size_t n = 1000;
  std::vector<double> states(2 * n, 0.0);
  const ParticleEnsemble ens(net, std::vector<std::uint32_t>(n, 0), 2, states);
  const DriftKernel drift(kernel, law);
  const DiffusionKernel diffusion(kernel, law);
  const double t_end = 1.0;
  const Trajectory traj =
      simulate_fokker_planck_particles(ens, drift, diffusion, t_end, 0.01, 42, {t_end});
  double var = 0.0;
  for (double x : traj.back().particle_states) var += x * x;
  var /= static_cast<double>(n);
  EXPECT_NEAR(var, 2.0 * c * t_end, 0.05 * 2.0 * c * t_end);
}

TEST(FokkerPlanck, BitReproducible) {
  const SiteSpace net = SiteSpace::network(1);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const DialectLaw law(2, 2.0, 0.2);
  std::vector<double> states = {0.6, 0.4, 0.4, 0.6, 0.5, 0.5};
  const ParticleEnsemble ens(net, {0, 0, 0}, 2, states);
  const DriftKernel drift(kernel, law);
  const DiffusionKernel diffusion(kernel, law);
  const Trajectory a = simulate_fokker_planck_particles(ens, drift, diffusion, 0.5, 0.01, 9, {0.5});
  const Trajectory b = simulate_fokker_planck_particles(ens, drift, diffusion, 0.5, 0.01, 9, {0.5});
  EXPECT_EQ(a.back().particle_states, b.back().particle_states);
}

// The dialect jump noise at small gamma: the second-order particle scheme
// should track the exact simulator's quadratic variation at matched times.
TEST(FokkerPlanck, TracksBoltzmannVariance) {
  const SiteSpace net = SiteSpace::network(1);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const double gamma = 0.05;
  const DialectLaw law(2, 2.0, gamma);
  const std::size_t n = 500;
  std::vector<double> states;
  for (std::size_t i = 0; i < n; ++i) {
    states.push_back(0.6);
    states.push_back(0.4);
  }
  const ParticleEnsemble ens(net, std::vector<std::uint32_t>(n, 0), 2, states);

  const double t_v = 0.4;  // rescaled horizon
  const double t_b = t_v * (1.0 + gamma) / gamma;
  const Trajectory boltz = simulate_master(ens, law, kernel, t_b, 123, {t_b});
  const DriftKernel drift(kernel, law);
  const DiffusionKernel diffusion(kernel, law);
  const Trajectory fp =
      simulate_fokker_planck_particles(ens, drift, diffusion, t_v, 0.005, 321, {t_v});

  const double qv_boltz = boltz.back().quad_variation;
  const double qv_fp = fp.back().quad_variation;
  ASSERT_GT(qv_boltz, 0.0);
  EXPECT_GT(qv_fp, 0.5 * qv_boltz);
  EXPECT_LT(qv_fp, 2.0 * qv_boltz);
}

TEST(FirstMomentRhs, ZeroMeanLawAndDialectIdentity) {
  const SiteSpace net = SiteSpace::network(2);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const IsotropicNoiseLaw noise(2, 0.1);
  const ParticleEnsemble ens(net, {0, 1}, 2, {0.5, 0.5, 0.7, 0.3});
  for (double x : first_moment_rhs(ens, kernel, noise)) EXPECT_EQ(x, 0.0);

  // dialect: (1/N^2) sum w (mean_a + mean_b) equals eps times the rescaled
  // drift-kernel double sum
  const DialectLaw law(2, 2.0, 0.25);
  const double eps = 0.25 / 1.25;
  const std::vector<double> rhs = first_moment_rhs(ens, kernel, law);
  DriftKernel drift(kernel, law);
  DriftKernel::Scratch scratch;
  std::vector<double> k(2), acc(2, 0.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      drift.eval(ens.site(i), ens.state(i), ens.site(j), ens.state(j), k, scratch);
      for (int c = 0; c < 2; ++c) acc[c] += k[c] / 4.0;
    }
  for (int c = 0; c < 2; ++c) EXPECT_NEAR(rhs[c], eps * acc[c], 1e-14);
}

// Finite-difference Monte Carlo derivative of the mean state at t = 0.
TEST(FirstMomentRhs, MatchesMasterEquationDrift) {
  const SiteSpace net = SiteSpace::network(2);
  const Kernel kernel = Kernel::constant(net, 1.0);
  const DialectLaw law(2, 2.0, 0.3);
  const std::size_t n = 50;
  std::vector<std::uint32_t> sites;
  std::vector<double> states;
  for (std::size_t i = 0; i < n; ++i) {
    sites.push_back(i % 2 == 0 ? 0 : 1);
    // conformity pulls these states toward e2, giving a clear mean drift
    if (i < n / 2) {
      states.push_back(0.40);
      states.push_back(0.60);
    } else {
      states.push_back(0.45);
      states.push_back(0.55);
    }
  }
  const ParticleEnsemble ens(net, sites, 2, states);
  const std::vector<double> predicted = first_moment_rhs(ens, kernel, law);

  const double dt = 0.05;
  const int replicas = 6000;
  std::vector<double> fd0, fd1;
  double mean0_0 = 0.0, mean0_1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean0_0 += states[2 * i] / static_cast<double>(n);
    mean0_1 += states[2 * i + 1] / static_cast<double>(n);
  }
  for (int r = 0; r < replicas; ++r) {
    MasterOptions opt;
    opt.t_end = dt;
    opt.seed = 5000 + static_cast<std::uint64_t>(r);
    opt.snapshot_times = {dt};
    const Trajectory traj = simulate_master(ens, law, kernel, opt);
    const auto& fs = traj.back().particle_states;
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m0 += fs[2 * i] / static_cast<double>(n);
      m1 += fs[2 * i + 1] / static_cast<double>(n);
    }
    fd0.push_back((m0 - mean0_0) / dt);
    fd1.push_back((m1 - mean0_1) / dt);
  }
  EXPECT_NEAR(mean(fd0), predicted[0], 3.0 * standard_error(fd0) + 0.05 * std::abs(predicted[0]));
  EXPECT_NEAR(mean(fd1), predicted[1], 3.0 * standard_error(fd1) + 0.05 * std::abs(predicted[1]));
}
