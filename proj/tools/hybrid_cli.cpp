#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hybrid/scenario.hpp"

namespace {

struct EpsArg {
  double left = 0.0;
  double right = 0.0;
  bool pair = false;
};

EpsArg parse_eps(const std::string& text) {
  EpsArg e;
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    e.left = e.right = hybrid::parse_double(text);
  } else {
    e.left = hybrid::parse_double(text.substr(0, comma));
    e.right = hybrid::parse_double(text.substr(comma + 1));
    e.pair = true;
  }
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1D kinetic/fluid hybrid solver"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run a scenario and write CSV snapshots");
  std::string scenario;
  std::string mode_name = "coupled";
  std::optional<std::string> eps_text;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<double> beta_thr;
  std::optional<int> buffer;
  std::optional<double> particles;
  bool plain = false;
  run_cmd->add_option("--scenario", scenario, "two-freq, unsteady-shock, sod, or a config file")->required();
  run_cmd->add_option("--mode", mode_name, "coupled | full-dsmc | euler-only")
      ->check(CLI::IsMember({"coupled", "full-dsmc", "euler-only"}));
  run_cmd->add_option("--eps", eps_text, "relaxation parameter, or left,right");
  run_cmd->add_option("--seed", seed, "RNG seed");
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--beta-thr", beta_thr, "breakdown threshold (inf disables the kinetic region)");
  run_cmd->add_option("--buffer", buffer, "buffer width in cells")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--particles", particles, "particle budget (per unit density or total, as the scenario)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--plain", plain, "full-dsmc only: plain DSMC instead of moment-guided particles");

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<EpsArg> eps;
    if (eps_text) eps = parse_eps(*eps_text);

    hybrid::ScenarioConfig config;
    if (std::filesystem::is_regular_file(scenario)) {
      config = hybrid::load_config(scenario);
    } else {
      config = hybrid::builtin_scenario(scenario, eps && !eps->pair ? std::optional<double>(eps->left)
                                                                    : std::nullopt);
    }
    if (eps) {
      config.epsilon.left = eps->left;
      config.epsilon.right = eps->right;
    }
    if (seed) config.seed = *seed;
    if (beta_thr) config.beta_thr = *beta_thr;
    if (buffer) config.buffer_width = *buffer;
    if (particles) config.budget.value = *particles;
    config.validate();

    hybrid::RunOptions options;
    options.mode = hybrid::run_mode_from_string(mode_name);
    options.plain_dsmc = plain;
    options.out_dir = out_dir;
    const auto result = hybrid::run(config, options);
    std::cout << config.name << " " << mode_name << ": " << result.steps << " steps, "
              << result.snapshots.size() << " snapshots, " << result.wall_seconds << " s -> " << out_dir << "\n";
  } catch (const hybrid::UnknownScenario& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hybrid::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << " (partial outputs in " << out_dir << ")\n";
    return 3;
  }
  return 0;
}
