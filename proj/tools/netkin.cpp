// netkin command line front end: run scenario configurations, execute the
// builtin scenarios, or validate a configuration without running it.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "netkin/netkin.hpp"

namespace {

std::filesystem::path default_out(const std::string& name) {
  if (const char* env = std::getenv("NETKIN_OUT")) return std::filesystem::path(env) / name;
  return std::filesystem::path("netkin-out") / name;
}

int execute(const netkin::ConfigValue& config, const netkin::RunOptions& options) {
  const netkin::ScenarioResult result = netkin::run_scenario(config, options);
  for (const auto& line : result.summary_lines) std::cout << line << "\n";
  for (const auto& path : result.outputs) std::cout << "wrote " << path.string() << "\n";
  if (!result.checks_passed) std::cerr << "netkin: one or more invariant checks failed\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netkin: network-structured kinetic simulations"};
  app.require_subcommand(1);

  std::string config_path, out_dir, builtin_name;
  std::optional<std::uint64_t> seed;
  int replicas = 1;

  CLI::App* run = app.add_subcommand("run", "run a scenario configuration file");
  run->add_option("config", config_path, "path to the scenario .toml")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--replicas", replicas, "independent seeded replicas")->check(CLI::PositiveNumber);

  CLI::App* scenario = app.add_subcommand("scenario", "run a builtin scenario by name");
  scenario->add_option("name", builtin_name, "builtin scenario name")->required();
  scenario->add_option("--out", out_dir, "output directory");
  scenario->add_option("--seed", seed, "override the scenario seed");
  scenario->add_option("--replicas", replicas, "independent seeded replicas")
      ->check(CLI::PositiveNumber);

  CLI::App* check = app.add_subcommand("check", "validate a configuration without running");
  check->add_option("config", config_path, "path to the scenario .toml")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto path = std::filesystem::path(config_path);
      const netkin::ConfigValue config = netkin::ConfigValue::parse_file(path);
      netkin::RunOptions options;
      options.base_dir = path.has_parent_path() ? path.parent_path() : ".";
      options.out_dir = out_dir.empty() ? default_out(path.stem().string())
                                        : std::filesystem::path(out_dir);
      options.seed_override = seed;
      options.replicas = replicas;
      return execute(config, options);
    }
    if (scenario->parsed()) {
      const auto& builtins = netkin::builtin_scenarios();
      const auto it = builtins.find(builtin_name);
      if (it == builtins.end()) {
        std::cerr << "netkin: unknown builtin scenario '" << builtin_name << "'. Available:";
        for (const auto& [name, text] : builtins) std::cerr << " " << name;
        std::cerr << "\n";
        return 2;
      }
      const netkin::ConfigValue config = netkin::ConfigValue::parse_string(it->second);
      netkin::RunOptions options;
      options.out_dir = out_dir.empty() ? default_out(builtin_name)
                                        : std::filesystem::path(out_dir);
      options.seed_override = seed;
      options.replicas = replicas;
      return execute(config, options);
    }
    // check
    const auto path = std::filesystem::path(config_path);
    const netkin::ConfigValue config = netkin::ConfigValue::parse_file(path);
    netkin::validate_scenario(config, path.has_parent_path() ? path.parent_path() : ".");
    std::cout << "configuration is valid\n";
    return 0;
  } catch (const netkin::ValidationError& e) {
    std::cerr << "netkin: validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "netkin: " << e.what() << "\n";
    return 1;
  }
}
