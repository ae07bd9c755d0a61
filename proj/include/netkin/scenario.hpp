#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "netkin/common.hpp"
#include "netkin/config.hpp"
#include "netkin/csv.hpp"
#include "netkin/dialect.hpp"
#include "netkin/epidemic.hpp"
#include "netkin/kernel.hpp"
#include "netkin/meanfield.hpp"
#include "netkin/norms.hpp"
#include "netkin/particle.hpp"
#include "netkin/stats.hpp"
#include "netkin/trajectory.hpp"

namespace netkin {

struct ScenarioResult {
  int exit_code = 0;
  bool checks_passed = true;
  std::vector<std::string> summary_lines;
  std::vector<std::filesystem::path> outputs;
};

struct RunOptions {
  std::filesystem::path out_dir = "netkin-out";
  std::optional<std::uint64_t> seed_override;
  int replicas = 1;
  std::filesystem::path base_dir = ".";  // resolves relative file references
};

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::uint64_t replica_seed(std::uint64_t base, std::uint64_t k) {
  return k == 0 ? base : Rng::mix(base ^ Rng::mix(0x9E3779B97F4A7C15ULL * k));
}

inline void check_line(std::vector<std::string>& lines, bool& ok, const std::string& name,
                       bool pass, const std::string& info) {
  lines.push_back("check " + name + ": " + (pass ? "PASS" : "FAIL") +
                  (info.empty() ? "" : " (" + info + ")"));
  ok = ok && pass;
}

inline Kernel kernel_from_config(const ConfigValue& cfg, const SiteSpace& space) {
  const std::string type = cfg.at("type").as_string("kernel.type");
  if (type == "constant") return Kernel::constant(space, cfg.at("value").as_number("kernel.value"));
  if (type == "triangle")
    return Kernel::triangle(space, cfg.at("x0").as_number("kernel.x0"),
                            cfg.at("amp").as_number("kernel.amp"));
  if (type == "convolution") {
    const std::string profile = cfg.at("profile").as_string("kernel.profile");
    const double eps = cfg.at("eps").as_number("kernel.eps");
    const double amp = cfg.find("amp") ? cfg.at("amp").as_number("kernel.amp") : 1.0;
    ConvolutionProfile p;
    p.support = 1.0;
    if (profile == "triangle") {
      p.k = [amp](double s) { return amp * std::max(1.0 - std::abs(s), 0.0); };
    } else if (profile == "uniform") {
      p.k = [amp](double s) { return std::abs(s) < 1.0 ? 0.5 * amp : 0.0; };
    } else if (profile == "quartic") {
      p.k = [amp](double s) {
        const double t = 1.0 - s * s;
        return t > 0.0 ? amp * t * t : 0.0;
      };
    } else {
      throw ValidationError("kernel.profile must be triangle, uniform or quartic");
    }
    return Kernel::convolution(space, std::move(p), eps);
  }
  throw ValidationError("kernel.type must be constant, triangle or convolution");
}

inline std::vector<double> random_simplex(std::size_t m, Rng& rng) {
  std::vector<double> v(m);
  double s = 0.0;
  for (double& x : v) {
    x = rng.exponential(1.0);
    s += x;
  }
  for (double& x : v) x /= s;
  return v;
}

// Named initial-profile generators shared by the dialect-family scenarios.
inline Field state_field_from_config(const ConfigValue& cfg, const SiteSpace& space, std::size_t m,
                                     Rng& rng) {
  const std::string type = cfg.at("type").as_string("v0.type");
  Field out(space, m, 0.0);
  if (type == "constant") {
    const std::vector<double> comps = cfg.at("components").as_number_array("v0.components");
    if (comps.size() != m) throw ValidationError("v0.components must have m entries");
    for (std::size_t s = 0; s < space.size(); ++s)
      for (std::size_t c = 0; c < m; ++c) out(s, c) = comps[c];
    return out;
  }
  if (type == "vertex") {
    const std::size_t idx = cfg.at("index").as_index("v0.index");
    if (idx >= m) throw ValidationError("v0.index must be below m");
    for (std::size_t s = 0; s < space.size(); ++s) out(s, idx) = 1.0;
    return out;
  }
  if (type == "random") {
    for (std::size_t s = 0; s < space.size(); ++s) {
      const std::vector<double> v = random_simplex(m, rng);
      for (std::size_t c = 0; c < m; ++c) out(s, c) = v[c];
    }
    return out;
  }
  if (type == "sine") {
    if (m != 2) throw ValidationError("v0.type = sine requires m = 2");
    if (!space.is_grid()) throw ValidationError("v0.type = sine requires a grid");
    const double base = cfg.at("base").as_number("v0.base");
    const double amp = cfg.at("amplitude").as_number("v0.amplitude");
    for (std::size_t s = 0; s < space.size(); ++s) {
      const double x = base + amp * std::sin(2.0 * 3.14159265358979323846 * space.position(s));
      if (!(x >= 0.0) || !(x <= 1.0)) throw ValidationError("v0 sine profile leaves the simplex");
      out(s, 0) = x;
      out(s, 1) = 1.0 - x;
    }
    return out;
  }
  if (type == "per-node") {
    const auto rows = cfg.at("values").as_matrix("v0.values");
    if (rows.size() != space.size()) throw ValidationError("v0.values must have one row per site");
    for (std::size_t s = 0; s < space.size(); ++s) {
      if (rows[s].size() != m) throw ValidationError("v0.values rows must have m entries");
      for (std::size_t c = 0; c < m; ++c) out(s, c) = rows[s][c];
    }
    return out;
  }
  throw ValidationError("v0.type must be constant, vertex, random, sine or per-node");
}

inline std::vector<std::vector<double>> matrix_from_file(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw ValidationError("referenced file does not exist: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(file, line)) {
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream is(line);
    std::vector<double> row;
    double x;
    while (is >> x) row.push_back(x);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("weight matrix file is empty: " + path.string());
  return rows;
}

struct PreparedScenario {
  std::string name;
  std::string model;
  std::uint64_t seed = 0;
  ConfigValue resolved;
  std::function<ScenarioResult(const std::filesystem::path&, std::uint64_t)> execute;
};

// ---------------------------------------------------------------- sir -----

inline PreparedScenario prepare_sir(const ConfigValue& root, PreparedScenario base) {
  const ConfigValue& cfg = root.at("sir");
  const std::string kind_str = cfg.at("kind").as_string("sir.kind");
  if (kind_str != "network" && kind_str != "reaction-diffusion" && kind_str != "local" &&
      kind_str != "compare")
    throw ValidationError("sir.kind must be network, reaction-diffusion, local or compare");

  const std::size_t n = cfg.at("n").as_index("sir.n");
  const SiteSpace grid = SiteSpace::periodic_grid(n);
  const Kernel kernel = kernel_from_config(cfg.at("kernel"), grid);

  SIRParams params{kernel, cfg.at("beta").as_number("sir.beta"), SIRKind::Network};
  params.dt = cfg.at("dt").as_number("sir.dt");
  params.t_end = cfg.at("t_end").as_number("sir.t_end");
  if (const ConfigValue* d1 = cfg.find("d1")) params.d1 = d1->as_number("sir.d1");
  if (const ConfigValue* d2 = cfg.find("d2")) params.d2 = d2->as_number("sir.d2");
  if (const ConfigValue* sg = cfg.find("sigma")) params.sigma = sg->as_number("sir.sigma");
  if (const ConfigValue* sc = cfg.find("scheme")) {
    const std::string s = sc->as_string("sir.scheme");
    if (s == "rk4")
      params.scheme = TimeScheme::RK4;
    else if (s != "euler")
      throw ValidationError("sir.scheme must be euler or rk4");
  }
  params.validate();

  const std::vector<double> stops = cfg.at("snapshot_times").as_number_array("sir.snapshot_times");

  const ConfigValue& v0cfg = cfg.at("v0");
  const double center = v0cfg.at("center").as_number("sir.v0.center");
  const double width = v0cfg.at("width").as_number("sir.v0.width");
  const double amplitude = v0cfg.at("amplitude").as_number("sir.v0.amplitude");
  if (!(width > 0.0)) throw ValidationError("sir.v0.width must be positive");
  const double u0_value = cfg.find("u0") ? cfg.at("u0").as_number("sir.u0") : 1.0;

  SIRState init{Field::constant(grid, u0_value), Field(grid, 1, 0.0), Field(grid, 1, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    double d = std::abs(grid.position(i) - center);
    d = std::min(d, 1.0 - d);
    init.v(i) = amplitude * std::exp(-0.5 * d * d / (width * width));
  }

  base.execute = [cfg = ConfigValue(cfg), kind_str, params, init, stops](
                     const std::filesystem::path& out, std::uint64_t) -> ScenarioResult {
    ScenarioResult result;
    auto conservation_ok = [&](const Trajectory& traj) {
      double worst = 0.0;
      for (const auto& pt : traj.points())
        for (std::size_t s = 0; s < pt.state.sites(); ++s) {
          const double total = pt.state(s, 0) + pt.state(s, 1) + pt.state(s, 2);
          const double initial = init.u(s) + init.v(s) + init.r(s);
          worst = std::max(worst, std::abs(total - initial));
        }
      return std::pair(worst <= 1e-10, worst);
    };
    auto u_monotone = [&](const Trajectory& traj) {
      double worst = -1.0;
      const Field* prev = &init.u;
      Field scratch;
      for (const auto& pt : traj.points()) {
        for (std::size_t s = 0; s < pt.state.sites(); ++s)
          worst = std::max(worst, pt.state(s, 0) - (*prev)(s, 0));
        scratch = Field(pt.state.space(), 1);
        for (std::size_t s = 0; s < pt.state.sites(); ++s) scratch(s) = pt.state(s, 0);
        prev = &scratch;
      }
      return std::pair(worst <= 1e-12, worst);
    };
    auto infected_mass = [&](const Trajectory& traj) {
      const auto& pt = traj.back();
      double acc = 0.0;
      for (std::size_t s = 0; s < pt.state.sites(); ++s) acc += pt.state(s, 1) + pt.state(s, 2);
      return acc * traj.space().quadrature_weight();
    };

    if (kind_str == "compare") {
      SIRParams net = params;
      net.kind = SIRKind::Network;
      SIRParams rd = params;
      rd.kind = SIRKind::ReactionDiffusion;
      const Trajectory tnet = solve_sir(init, net, stops);
      const Trajectory trd = solve_sir(init, rd, stops);
      export_csv(tnet, out / "network.csv");
      export_csv(trd, out / "rd.csv");
      result.outputs = {out / "network.csv", out / "rd.csv"};

      const double mass_net = infected_mass(tnet);
      const double mass_rd = infected_mass(trd);
      result.summary_lines.push_back("network infected+removed mass at t_final: " +
                                     format_double(mass_net));
      result.summary_lines.push_back("rd infected+removed mass at t_final: " +
                                     format_double(mass_rd));
      check_line(result.summary_lines, result.checks_passed, "higher-infected-mass",
                 mass_net > mass_rd,
                 "network " + format_double(mass_net) + " vs rd " + format_double(mass_rd));
      const auto [cons_ok, cons] = conservation_ok(tnet);
      check_line(result.summary_lines, result.checks_passed, "network-conservation", cons_ok,
                 "max drift " + format_double(cons));
      const auto [mono_ok, mono] = u_monotone(tnet);
      check_line(result.summary_lines, result.checks_passed, "network-u-nonincreasing", mono_ok,
                 "max increase " + format_double(mono));
    } else {
      SIRParams p = params;
      p.kind = kind_str == "network"
                   ? SIRKind::Network
                   : (kind_str == "reaction-diffusion" ? SIRKind::ReactionDiffusion
                                                       : SIRKind::Local);
      const Trajectory traj = solve_sir(init, p, stops);
      export_csv(traj, out / "solution.csv");
      result.outputs = {out / "solution.csv"};
      if (p.kind != SIRKind::ReactionDiffusion) {
        const auto [cons_ok, cons] = conservation_ok(traj);
        check_line(result.summary_lines, result.checks_passed, "conservation", cons_ok,
                   "max drift " + format_double(cons));
      } else {
        // only global mass is conserved under the diffusive comparison model
        double init_mass = 0.0, final_mass = 0.0;
        for (std::size_t s = 0; s < init.u.sites(); ++s)
          init_mass += init.u(s) + init.v(s) + init.r(s);
        const auto& pt = traj.back();
        for (std::size_t s = 0; s < pt.state.sites(); ++s)
          final_mass += pt.state(s, 0) + pt.state(s, 1) + pt.state(s, 2);
        check_line(result.summary_lines, result.checks_passed, "global-conservation",
                   std::abs(final_mass - init_mass) <= 1e-8 * std::max(1.0, init_mass),
                   "drift " + format_double(final_mass - init_mass));
      }
      if (p.kind == SIRKind::Local) {
        SIRState last{Field(init.u.space(), 1), Field(init.u.space(), 1), Field(init.u.space(), 1)};
        const auto& pt = traj.back();
        for (std::size_t s = 0; s < pt.state.sites(); ++s) {
          last.u(s) = pt.state(s, 0);
          last.v(s) = pt.state(s, 1);
          last.r(s) = pt.state(s, 2);
        }
        const PositivityReport report = positivity_violation_check(last, p);
        result.summary_lines.push_back(
            "positivity violations at t_final: " + std::to_string(report.flagged_sites.size()) +
            " sites, max du/dt " + format_double(report.max_du));
      }
    }
    return result;
  };
  return base;
}

// ------------------------------------------------------------- dialect ----

inline PreparedScenario prepare_dialect(const ConfigValue& root, PreparedScenario base) {
  const ConfigValue& cfg = root.at("dialect");
  const std::string level =
      cfg.find("level") ? cfg.at("level").as_string("dialect.level") : "monokinetic";
  if (level != "monokinetic" && level != "characteristics" && level != "boltzmann" &&
      level != "local")
    throw ValidationError("dialect.level must be monokinetic, characteristics, boltzmann or local");

  const std::size_t m = cfg.at("m").as_index("dialect.m");
  const double alpha_exp = cfg.at("alpha_exp").as_number("dialect.alpha_exp");
  const double gamma = cfg.at("gamma").as_number("dialect.gamma");
  const std::size_t n = cfg.at("n").as_index("dialect.n");
  const SiteSpace grid = SiteSpace::periodic_grid(n);
  const Kernel kernel = kernel_from_config(cfg.at("kernel"), grid);
  const double rho_value = cfg.at("rho").as_number("dialect.rho");
  const Field rho = Field::constant(grid, rho_value);
  DialectParams params{m, alpha_exp, gamma, kernel, rho};
  params.validate();

  const double dt = cfg.at("dt").as_number("dialect.dt");
  const double t_end = cfg.at("t_end").as_number("dialect.t_end");
  const std::vector<double> stops =
      cfg.at("snapshot_times").as_number_array("dialect.snapshot_times");

  DialectVariant variant = DialectVariant::NonlinearDiffusion;
  LocalVariant local_variant = LocalVariant::Burridge;
  if (const ConfigValue* v = cfg.find("variant")) {
    const std::string s = v->as_string("dialect.variant");
    if (s == "nonlinear-diffusion")
      variant = DialectVariant::NonlinearDiffusion;
    else if (s == "linear-diffusion")
      variant = DialectVariant::LinearDiffusion;
    else if (s == "burridge")
      local_variant = LocalVariant::Burridge;
    else if (s == "allen-cahn")
      local_variant = LocalVariant::AllenCahn;
    else if (s == "p-form")
      local_variant = LocalVariant::PForm;
    else
      throw ValidationError(
          "dialect.variant must be nonlinear-diffusion, linear-diffusion, burridge, allen-cahn or "
          "p-form");
  }

  double sigma = 0.0, kappa_const = 0.0;
  if (level == "local") {
    sigma = cfg.at("sigma").as_number("dialect.sigma");
    kappa_const = cfg.at("kappa").as_number("dialect.kappa");
  }
  std::size_t agents_per_site = 0;
  if (level == "characteristics" || level == "boltzmann")
    agents_per_site = cfg.at("agents_per_site").as_index("dialect.agents_per_site");

  const ConfigValue v0cfg = cfg.at("v0");
  const bool check_variance = cfg.find("checks") && cfg.at("checks").find("variance_decay") &&
                              cfg.at("checks").at("variance_decay").as_bool();
  const bool check_coarsening = cfg.find("checks") && cfg.at("checks").find("coarsening") &&
                                cfg.at("checks").at("coarsening").as_bool();
  const double variance_tol = cfg.find("checks") && cfg.at("checks").find("tolerance")
                                  ? cfg.at("checks").at("tolerance").as_number()
                                  : 0.05;
  const double vertex_tol = cfg.find("checks") && cfg.at("checks").find("vertex_tolerance")
                                ? cfg.at("checks").at("vertex_tolerance").as_number()
                                : 1e-3;

  base.execute = [=](const std::filesystem::path& out, std::uint64_t seed) -> ScenarioResult {
    ScenarioResult result;
    Rng rng(seed);

    if (level == "monokinetic" || level == "local") {
      const Field v0 = state_field_from_config(v0cfg, grid, m, rng);
      Trajectory traj =
          level == "monokinetic"
              ? solve_dialect_monokinetic(params, v0, t_end, dt, variant, stops)
              : solve_burridge_local(params, v0, sigma, kappa_const, t_end, dt, local_variant,
                                     stops);
      export_csv(traj, out / "trajectory.csv");
      result.outputs = {out / "trajectory.csv"};
      result.summary_lines.push_back(
          "final max distance to a vertex: " + format_double(max_vertex_distance(traj.back().state)));
      if (check_coarsening) {
        std::size_t prev = interface_count(traj.front().state);
        bool monotone = true;
        std::string counts = std::to_string(prev);
        for (std::size_t k = 1; k < traj.points().size(); ++k) {
          const std::size_t cur = interface_count(traj.points()[k].state);
          monotone = monotone && cur <= prev;
          counts += " -> " + std::to_string(cur);
          prev = cur;
        }
        result.summary_lines.push_back("interface counts: " + counts);
        check_line(result.summary_lines, result.checks_passed, "interfaces-nonincreasing", monotone,
                   counts);
        const double dist = max_vertex_distance(traj.back().state);
        check_line(result.summary_lines, result.checks_passed, "vertex-convergence",
                   dist <= vertex_tol, "max distance " + format_double(dist));
      }
      return result;
    }

    // particle levels share the initial ensemble construction
    std::vector<std::uint32_t> sites;
    std::vector<double> states;
    const std::string v0type = v0cfg.at("type").as_string("dialect.v0.type");
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t k = 0; k < agents_per_site; ++k) {
        sites.push_back(static_cast<std::uint32_t>(s));
        std::vector<double> v;
        if (v0type == "random") {
          v = random_simplex(m, rng);
        } else {
          const Field f = state_field_from_config(v0cfg, grid, m, rng);
          v.assign(f.at(s).begin(), f.at(s).end());
        }
        states.insert(states.end(), v.begin(), v.end());
      }
    }
    const ParticleEnsemble ensemble(grid, std::move(sites), m, std::move(states));
    const DialectLaw law = dialect_law(params);

    Trajectory traj;
    if (level == "characteristics") {
      const DriftKernel drift(kernel, law);
      traj = solve_characteristics(ensemble, drift, t_end, dt, stops);
    } else {
      traj = simulate_master(ensemble, law, kernel, t_end, seed, stops);
    }
    export_csv(traj, out / "observables.csv");
    result.outputs = {out / "observables.csv"};

    if (check_variance) {
      const Field kappa = kernel_mass(kernel, rho);
      double kappa0 = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < kappa.sites(); ++s)
        if (rho(s) > 1e-12) kappa0 = std::min(kappa0, kappa(s));
      if (!std::isfinite(kappa0)) kappa0 = 0.0;
      const VarianceDecayReport report = variance_decay_check(traj, kappa0, variance_tol);
      result.summary_lines.push_back("variance decay vs exp(-2 kappa0 t) bound, kappa0 = " +
                                     format_double(kappa0));
      for (const auto& row : report.rows)
        result.summary_lines.push_back("  t=" + format_double(row.t) +
                                       " qvar=" + format_double(row.value) +
                                       " bound=" + format_double(row.bound) +
                                       (row.pass ? " PASS" : " FAIL"));
      check_line(result.summary_lines, result.checks_passed, "variance-decay", report.passed, "");
    }
    return result;
  };
  return base;
}

// --------------------------------------------------------------- norms ----

inline PreparedScenario prepare_norms(const ConfigValue& root, PreparedScenario base,
                                      const std::filesystem::path& base_dir) {
  const ConfigValue& cfg = root.at("norms");
  const std::size_t m = cfg.at("m").as_index("norms.m");
  const std::size_t j = cfg.at("j").as_index("norms.j");
  if (j == 0) throw ValidationError("norms.j must be positive");

  const ConfigValue& netcfg = cfg.at("network");
  std::vector<std::vector<double>> weights;
  std::size_t clique_size = 0;
  if (netcfg.find("weights")) {
    weights = netcfg.at("weights").as_matrix("norms.network.weights");
  } else if (netcfg.find("csv")) {
    weights = matrix_from_file(base_dir / netcfg.at("csv").as_string("norms.network.csv"));
  } else if (netcfg.find("type") && netcfg.at("type").as_string() == "two-cliques") {
    clique_size = netcfg.at("clique_size").as_index("norms.network.clique_size");
    const double intra = netcfg.at("intra").as_number("norms.network.intra");
    const double inter = netcfg.at("inter").as_number("norms.network.inter");
    const std::size_t total = 2 * clique_size;
    weights.assign(total, std::vector<double>(total, inter));
    for (std::size_t a = 0; a < total; ++a)
      for (std::size_t b = 0; b < total; ++b)
        if ((a < clique_size) == (b < clique_size)) weights[a][b] = intra;
  } else {
    throw ValidationError("norms.network needs weights, csv or type = two-cliques");
  }

  const std::size_t nodes = weights.size();
  const SiteSpace net = SiteSpace::network(nodes);
  const Kernel kernel = Kernel::dense(net, weights);

  const double rho_value = cfg.at("rho").as_number("norms.rho");
  const double s0_value = cfg.at("s0").as_number("norms.s0");
  if (!(s0_value > 0.0)) throw ValidationError("norms.s0 must be positive");
  NormsParams params{m, 1.0 / static_cast<double>(j), kernel, Field::constant(net, rho_value),
                     std::vector<double>(nodes, s0_value)};
  params.validate();

  const double dt = cfg.at("dt").as_number("norms.dt");
  const double t_end = cfg.at("t_end").as_number("norms.t_end");
  const std::vector<double> stops =
      cfg.at("snapshot_times").as_number_array("norms.snapshot_times");

  const ConfigValue v0cfg = cfg.at("v0");
  Field v0(net, m, 0.0);
  {
    Rng rng(0);  // per-node generators below are deterministic
    if (v0cfg.at("type").as_string() == "two-cliques") {
      if (clique_size == 0)
        throw ValidationError("v0.type = two-cliques requires network.type = two-cliques");
      const auto first = v0cfg.at("first").as_number_array("norms.v0.first");
      const auto second = v0cfg.at("second").as_number_array("norms.v0.second");
      if (first.size() != m || second.size() != m)
        throw ValidationError("norms.v0.first/second must have m entries");
      for (std::size_t s = 0; s < nodes; ++s)
        for (std::size_t c = 0; c < m; ++c) v0(s, c) = (s < clique_size ? first : second)[c];
    } else {
      v0 = state_field_from_config(v0cfg, net, m, rng);
    }
  }

  const bool check_segregation = cfg.find("checks") && cfg.at("checks").find("segregation") &&
                                 cfg.at("checks").at("segregation").as_bool();
  const double seg_tol = cfg.find("checks") && cfg.at("checks").find("tolerance")
                             ? cfg.at("checks").at("tolerance").as_number()
                             : 0.05;

  base.execute = [=](const std::filesystem::path& out, std::uint64_t) -> ScenarioResult {
    ScenarioResult result;
    const Trajectory traj = solve_norms_monokinetic(params, v0, t_end, dt, stops);
    export_csv(traj, out / "trajectory.csv");
    result.outputs = {out / "trajectory.csv"};

    const Field& final_state = traj.back().state;
    result.summary_lines.push_back(
        "final max distance to a vertex: " + format_double(max_vertex_distance(final_state)));
    if (check_segregation) {
      auto clique_mean = [&](std::size_t begin, std::size_t end) {
        std::vector<double> mean(m, 0.0);
        for (std::size_t s = begin; s < end; ++s)
          for (std::size_t c = 0; c < m; ++c) mean[c] += final_state(s, c);
        for (double& x : mean) x /= static_cast<double>(end - begin);
        return mean;
      };
      auto nearest_vertex = [&](const std::vector<double>& mean) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < m; ++c)
          if (mean[c] > mean[best]) best = c;
        double d2 = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
          const double d = mean[c] - (c == best ? 1.0 : 0.0);
          d2 += d * d;
        }
        return std::pair(best, std::sqrt(d2));
      };
      const auto [va, da] = nearest_vertex(clique_mean(0, clique_size));
      const auto [vb, db] = nearest_vertex(clique_mean(clique_size, nodes));
      result.summary_lines.push_back("clique A vertex " + std::to_string(va + 1) + " distance " +
                                     format_double(da));
      result.summary_lines.push_back("clique B vertex " + std::to_string(vb + 1) + " distance " +
                                     format_double(db));
      check_line(result.summary_lines, result.checks_passed, "segregation",
                 va != vb && da <= seg_tol && db <= seg_tol, "");
    }
    return result;
  };
  return base;
}

// ---------------------------------------------- particle vs mean field ----

inline PreparedScenario prepare_pvm(const ConfigValue& root, PreparedScenario base) {
  const ConfigValue& cfg = root.at("particle-vs-meanfield");
  const std::size_t m = cfg.at("m").as_index("m");
  const double alpha_exp = cfg.at("alpha_exp").as_number("alpha_exp");
  const double gamma = cfg.at("gamma").as_number("gamma");
  const std::size_t n = cfg.at("n").as_index("n");
  const SiteSpace grid = SiteSpace::periodic_grid(n);
  const Kernel kernel = kernel_from_config(cfg.at("kernel"), grid);
  DialectParams params{m, alpha_exp, gamma, kernel, Field::constant(grid, 1.0)};
  params.validate();

  const double dt = cfg.at("dt").as_number("dt");
  const double t_end = cfg.at("t_end").as_number("t_end");
  std::vector<std::size_t> n_agents;
  for (double x : cfg.at("n_agents").as_number_array("n_agents")) {
    if (!(x > 0.0) || x != std::floor(x)) throw ValidationError("n_agents must be positive integers");
    if (static_cast<std::size_t>(x) % n != 0)
      throw ValidationError("n_agents entries must be divisible by the cell count n");
    n_agents.push_back(static_cast<std::size_t>(x));
  }
  if (n_agents.size() < 2) throw ValidationError("n_agents needs at least two sizes");
  const std::size_t seeds = cfg.at("seeds").as_index("seeds");
  if (seeds == 0) throw ValidationError("seeds must be positive");
  const ConfigValue v0cfg = cfg.at("v0");

  base.execute = [=](const std::filesystem::path& out, std::uint64_t seed) -> ScenarioResult {
    ScenarioResult result;
    Rng v0rng(seed);
    const Field v0 = state_field_from_config(v0cfg, grid, m, v0rng);

    // mean-field reference (rescaled time), then the exact runs in unscaled
    // time t * (1+gamma)/gamma
    const Trajectory ref =
        solve_dialect_monokinetic(params, v0, t_end, dt, DialectVariant::NonlinearDiffusion,
                                  {t_end});
    const Field& vref = ref.back().state;
    const double t_master = t_end * (1.0 + gamma) / gamma;
    const DialectLaw law = dialect_law(params);

    std::string csv = "n_agents,seed,rms\n";
    std::vector<double> mean_rms;
    for (const std::size_t big_n : n_agents) {
      double acc = 0.0;
      for (std::size_t k = 0; k < seeds; ++k) {
        const std::uint64_t run_seed = replica_seed(seed, 1000003 * (k + 1) + big_n);
        const ParticleEnsemble ensemble = ParticleEnsemble::monokinetic(v0, big_n / n);
        MasterOptions opt;
        opt.t_end = t_master;
        opt.seed = run_seed;
        opt.snapshot_times = {t_master};
        opt.store_states_limit = 0;
        const Trajectory traj = simulate_master(ensemble, law, kernel, opt);
        const Field& mean_state = traj.back().state;
        double rms = 0.0;
        for (std::size_t s = 0; s < n; ++s)
          for (std::size_t c = 0; c < m; ++c) {
            const double d = mean_state(s, c) - vref(s, c);
            rms += d * d;
          }
        rms = std::sqrt(rms / static_cast<double>(n));
        acc += rms;
        csv += std::to_string(big_n) + "," + std::to_string(k) + "," + format_double(rms) + "\n";
      }
      mean_rms.push_back(acc / static_cast<double>(seeds));
    }
    {
      std::ofstream file(out / "rms.csv", std::ios::binary);
      if (!file) throw IoError("cannot write " + (out / "rms.csv").string());
      file << csv;
    }
    result.outputs = {out / "rms.csv"};
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < mean_rms.size(); ++i)
      decreasing = decreasing && mean_rms[i + 1] < mean_rms[i];
    for (std::size_t i = 0; i < n_agents.size(); ++i)
      result.summary_lines.push_back("N = " + std::to_string(n_agents[i]) +
                                     ": mean rms = " + format_double(mean_rms[i]));
    result.summary_lines.push_back(
        "rms ratio last/first: " + format_double(mean_rms.back() / mean_rms.front()));
    check_line(result.summary_lines, result.checks_passed, "rms-decreasing", decreasing, "");
    return result;
  };
  return base;
}

// ------------------------------------------------------------ dispatch ----

inline PreparedScenario prepare_scenario(const ConfigValue& config,
                                         const std::filesystem::path& base_dir = ".") {
  if (!config.is_table()) throw ValidationError("configuration root must be a table");
  static const std::vector<std::string> models = {"sir", "dialect", "norms",
                                                  "particle-vs-meanfield"};
  static const std::vector<std::string> allowed = {"model", "name", "seed", "description", "meta"};
  std::vector<std::string> offending;
  for (const auto& [key, value] : config.as_table()) {
    if (std::find(models.begin(), models.end(), key) != models.end()) continue;
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    offending.push_back(key);
  }
  if (!offending.empty()) {
    std::string msg = "unknown top-level keys:";
    for (const auto& k : offending) msg += " '" + k + "'";
    throw ValidationError(msg);
  }

  const std::string model = config.at("model").as_string("model");
  if (std::find(models.begin(), models.end(), model) == models.end())
    throw ValidationError("model must be sir, dialect, norms or particle-vs-meanfield");
  for (const auto& other : models)
    if (other != model && config.contains(other))
      throw ValidationError("exactly one model block may be present; found '" + other + "'");
  if (!config.contains(model)) throw ValidationError("missing required key '" + model + "'");

  PreparedScenario base;
  base.model = model;
  base.name = config.find("name") ? config.at("name").as_string("name") : model;
  base.seed = config.find("seed") ? config.at("seed").as_index("seed") : 0;
  base.resolved = config;
  base.resolved.set("seed", ConfigValue(static_cast<double>(base.seed)));
  base.resolved.set("name", ConfigValue(base.name));
  ConfigValue meta;
  meta.set("version", ConfigValue(std::string(kVersion)));
  base.resolved.set("meta", meta);

  if (model == "sir") return prepare_sir(config, std::move(base));
  if (model == "dialect") return prepare_dialect(config, std::move(base));
  if (model == "norms") return prepare_norms(config, std::move(base), base_dir);
  return prepare_pvm(config, std::move(base));
}

}  // namespace detail

inline void validate_scenario(const ConfigValue& config,
                              const std::filesystem::path& base_dir = ".") {
  detail::prepare_scenario(config, base_dir);
}

// Builtin scenario configurations; each doubles as an acceptance experiment.
inline const std::map<std::string, std::string>& builtin_scenarios() {
  static const std::map<std::string, std::string> scenarios = {
      {"fig1", R"(name = "fig1"
model = "sir"
seed = 1

[sir]
kind = "compare"
beta = 0.1
n = 100
dt = 0.01
t_end = 5.0
snapshot_times = [1.0, 2.0, 3.0, 4.0, 5.0]

[sir.kernel]
type = "triangle"
x0 = 0.2
amp = 0.3

[sir.v0]
center = 0.5
width = 0.02
amplitude = 1.0
)"},
      {"dialect-variance", R"(name = "dialect-variance"
model = "dialect"
seed = 7

[dialect]
level = "characteristics"
m = 3
alpha_exp = 2.0
gamma = 0.1
n = 10
rho = 1.0
agents_per_site = 50
dt = 0.02
t_end = 4.0
snapshot_times = [0.0, 0.5, 1.0, 2.0, 4.0]

[dialect.kernel]
type = "constant"
value = 1.0

[dialect.v0]
type = "random"

[dialect.checks]
variance_decay = true
tolerance = 0.05
)"},
      {"dialect-coarsening", R"(name = "dialect-coarsening"
model = "dialect"
seed = 11

[dialect]
level = "monokinetic"
variant = "nonlinear-diffusion"
m = 2
alpha_exp = 2.0
gamma = 0.1
n = 100
rho = 1.0
dt = 0.05
t_end = 200.0
snapshot_times = [0.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0]

[dialect.kernel]
type = "triangle"
x0 = 0.5
amp = 4.0

[dialect.v0]
type = "random"

[dialect.checks]
coarsening = true
vertex_tolerance = 0.001
)"},
      {"norms-two-cliques", R"(name = "norms-two-cliques"
model = "norms"
seed = 3

[norms]
m = 4
j = 100
rho = 1.0
s0 = 1.0
dt = 0.01
t_end = 100.0
snapshot_times = [1.0, 10.0, 50.0, 100.0]

[norms.network]
type = "two-cliques"
clique_size = 5
intra = 1.0
inter = 0.01

[norms.v0]
type = "two-cliques"
first = [0.4, 0.3, 0.2, 0.1]
second = [0.3, 0.4, 0.2, 0.1]

[norms.checks]
segregation = true
tolerance = 0.05
)"},
      {"particle-vs-meanfield", R"(name = "particle-vs-meanfield"
model = "particle-vs-meanfield"
seed = 5

[particle-vs-meanfield]
m = 2
alpha_exp = 2.0
gamma = 0.01
n = 20
n_agents = [100, 400]
seeds = 10
dt = 0.01
t_end = 0.5

[particle-vs-meanfield.kernel]
type = "triangle"
x0 = 0.3
amp = 11.111111111111111

[particle-vs-meanfield.v0]
type = "sine"
base = 0.5
amplitude = 0.4
)"}};
  return scenarios;
}

// Run one scenario end to end: resolve, execute (optionally replicated with
// derived seeds), export CSVs, write manifest.toml and summary.txt per run
// directory. Exit code 0 on success, 1 when an invariant check fails.
inline ScenarioResult run_scenario(const ConfigValue& config, const RunOptions& options) {
  detail::PreparedScenario prepared = detail::prepare_scenario(config, options.base_dir);
  if (options.seed_override) {
    prepared.seed = *options.seed_override;
    prepared.resolved.set("seed", ConfigValue(static_cast<double>(prepared.seed)));
  }
  if (options.replicas < 1) throw ArgumentError("run_scenario: replicas must be >= 1");

  auto run_one = [&](const std::filesystem::path& dir, std::uint64_t seed) -> ScenarioResult {
    std::filesystem::create_directories(dir);
    ConfigValue manifest = prepared.resolved;
    manifest.set("seed", ConfigValue(static_cast<double>(seed)));
    {
      std::ofstream file(dir / "manifest.toml", std::ios::binary);
      if (!file) throw IoError("cannot write " + (dir / "manifest.toml").string());
      file << manifest.serialize();
    }
    ScenarioResult result = prepared.execute(dir, seed);
    result.outputs.push_back(dir / "manifest.toml");
    std::string summary = "scenario: " + prepared.name + "\nseed: " + std::to_string(seed) + "\n";
    for (const auto& line : result.summary_lines) summary += line + "\n";
    summary += std::string("result: ") + (result.checks_passed ? "OK" : "CHECK FAILURES") + "\n";
    {
      std::ofstream file(dir / "summary.txt", std::ios::binary);
      if (!file) throw IoError("cannot write " + (dir / "summary.txt").string());
      file << summary;
    }
    result.outputs.push_back(dir / "summary.txt");
    result.exit_code = result.checks_passed ? 0 : 1;
    return result;
  };

  if (options.replicas == 1) return run_one(options.out_dir, prepared.seed);

  std::vector<ScenarioResult> results(static_cast<std::size_t>(options.replicas));
  std::vector<std::string> errors(static_cast<std::size_t>(options.replicas));
  std::vector<std::thread> threads;
  for (int k = 0; k < options.replicas; ++k) {
    threads.emplace_back([&, k]() {
      char tag[16];
      std::snprintf(tag, sizeof(tag), "replica-%02d", k);
      try {
        results[static_cast<std::size_t>(k)] = run_one(
            options.out_dir / tag,
            detail::replica_seed(prepared.seed, static_cast<std::uint64_t>(k)));
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(k)] = e.what();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw Error("replica failed: " + e);

  ScenarioResult merged;
  for (const auto& r : results) {
    merged.exit_code = std::max(merged.exit_code, r.exit_code);
    merged.checks_passed = merged.checks_passed && r.checks_passed;
    merged.outputs.insert(merged.outputs.end(), r.outputs.begin(), r.outputs.end());
    merged.summary_lines.insert(merged.summary_lines.end(), r.summary_lines.begin(),
                                r.summary_lines.end());
  }
  return merged;
}

}  // namespace netkin
