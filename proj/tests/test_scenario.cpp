#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "netkin/csv.hpp"
#include "netkin/scenario.hpp"

using namespace netkin;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "netkin-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  EXPECT_TRUE(file.good()) << path;
  std::ostringstream buf;
  buf << file.rdbuf();
  return buf.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

}  // namespace

TEST(Scenario, BuiltinsAllValidate) {
  for (const auto& [name, text] : builtin_scenarios()) {
    SCOPED_TRACE(name);
    EXPECT_NO_THROW(validate_scenario(ConfigValue::parse_string(text)));
  }
}

TEST(Scenario, MissingKeyNamesIt) {
  std::string text = builtin_scenarios().at("fig1");
  const auto pos = text.find("beta = 0.1\n");
  ASSERT_NE(pos, std::string::npos);
  text.erase(pos, std::string("beta = 0.1\n").size());
  try {
    validate_scenario(ConfigValue::parse_string(text));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
}

TEST(Scenario, RejectsUnknownTopLevelAndDuplicateModelBlocks) {
  const std::string unknown = builtin_scenarios().at("fig1") + "\n[mystery]\nx = 1\n";
  try {
    validate_scenario(ConfigValue::parse_string(unknown));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("mystery"), std::string::npos);
  }

  const std::string twin = builtin_scenarios().at("fig1") + "\n[dialect]\nm = 2\n";
  EXPECT_THROW(validate_scenario(ConfigValue::parse_string(twin)), ValidationError);
}

TEST(Scenario, Fig1ProducesExpectedOutputs) {
  const fs::path dir = fresh_dir("fig1");
  const ConfigValue config = ConfigValue::parse_string(builtin_scenarios().at("fig1"));
  RunOptions options;
  options.out_dir = dir;
  const ScenarioResult result = run_scenario(config, options);
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_TRUE(result.checks_passed);

  const std::string network = slurp(dir / "network.csv");
  const std::string rd = slurp(dir / "rd.csv");
  // 5 snapshots x 100 sites plus the header
  EXPECT_EQ(count_lines(network), 501u);
  EXPECT_EQ(count_lines(rd), 501u);
  EXPECT_EQ(network.substr(0, network.find('\n')), "t,site,x,u,v,r");

  const std::string summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("check higher-infected-mass: PASS"), std::string::npos);
  EXPECT_NE(summary.find("check network-u-nonincreasing: PASS"), std::string::npos);
  EXPECT_NE(summary.find("check network-conservation: PASS"), std::string::npos);
}

// manifest -> re-run reproduces byte-identical outputs
TEST(Scenario, ManifestRoundTripIsByteIdentical) {
  const fs::path dir_a = fresh_dir("roundtrip-a");
  const fs::path dir_b = fresh_dir("roundtrip-b");
  const ConfigValue config =
      ConfigValue::parse_string(builtin_scenarios().at("dialect-variance"));
  RunOptions options;
  options.out_dir = dir_a;
  const ScenarioResult first = run_scenario(config, options);
  EXPECT_EQ(first.exit_code, 0);

  const ConfigValue manifest = ConfigValue::parse_file(dir_a / "manifest.toml");
  RunOptions rerun;
  rerun.out_dir = dir_b;
  const ScenarioResult second = run_scenario(manifest, rerun);
  EXPECT_EQ(second.exit_code, 0);
  EXPECT_EQ(slurp(dir_a / "observables.csv"), slurp(dir_b / "observables.csv"));
  EXPECT_EQ(slurp(dir_a / "summary.txt"), slurp(dir_b / "summary.txt"));
}

TEST(Scenario, VarianceSummaryContainsBoundTable) {
  const fs::path dir = fresh_dir("variance");
  const ConfigValue config =
      ConfigValue::parse_string(builtin_scenarios().at("dialect-variance"));
  RunOptions options;
  options.out_dir = dir;
  const ScenarioResult result = run_scenario(config, options);
  EXPECT_EQ(result.exit_code, 0);
  const std::string summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("variance decay"), std::string::npos);
  EXPECT_NE(summary.find("bound="), std::string::npos);
  EXPECT_NE(summary.find("check variance-decay: PASS"), std::string::npos);
}

TEST(Scenario, NormsTwoCliquesSegregates) {
  const fs::path dir = fresh_dir("cliques");
  const ConfigValue config =
      ConfigValue::parse_string(builtin_scenarios().at("norms-two-cliques"));
  RunOptions options;
  options.out_dir = dir;
  const ScenarioResult result = run_scenario(config, options);
  EXPECT_EQ(result.exit_code, 0);
  const std::string summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("check segregation: PASS"), std::string::npos);
}

TEST(Scenario, ReplicasWriteSeparateDirectories) {
  const fs::path dir = fresh_dir("replicas");
  const ConfigValue config =
      ConfigValue::parse_string(builtin_scenarios().at("dialect-variance"));
  RunOptions options;
  options.out_dir = dir;
  options.replicas = 2;
  const ScenarioResult result = run_scenario(config, options);
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_TRUE(fs::exists(dir / "replica-00" / "observables.csv"));
  EXPECT_TRUE(fs::exists(dir / "replica-01" / "observables.csv"));
  // distinct seeds produce distinct trajectories
  EXPECT_NE(slurp(dir / "replica-00" / "observables.csv"),
            slurp(dir / "replica-01" / "observables.csv"));
}

TEST(Scenario, SeedOverrideChangesRandomRuns) {
  const fs::path dir_a = fresh_dir("seed-a");
  const fs::path dir_b = fresh_dir("seed-b");
  const ConfigValue config =
      ConfigValue::parse_string(builtin_scenarios().at("dialect-variance"));
  RunOptions a;
  a.out_dir = dir_a;
  a.seed_override = 101;
  RunOptions b;
  b.out_dir = dir_b;
  b.seed_override = 202;
  run_scenario(config, a);
  run_scenario(config, b);
  EXPECT_NE(slurp(dir_a / "observables.csv"), slurp(dir_b / "observables.csv"));
}

TEST(ExportCsv, EmptyTrajectoryIsHeaderOnly) {
  Trajectory traj(SiteSpace::periodic_grid(4), {"u", "v"});
  EXPECT_EQ(trajectory_csv(traj), "t,site,x,u,v\n");
}

TEST(ExportCsv, SeventeenSignificantDigits) {
  Trajectory traj(SiteSpace::periodic_grid(1), {"a"});
  TrajectoryPoint pt;
  pt.t = 1.0 / 3.0;
  pt.state = Field::from_data(SiteSpace::periodic_grid(1), 1, {2.0 / 3.0});
  traj.add_point(std::move(pt));
  const std::string csv = trajectory_csv(traj);
  EXPECT_NE(csv.find("0.33333333333333331"), std::string::npos);
  EXPECT_NE(csv.find("0.66666666666666663"), std::string::npos);
}
