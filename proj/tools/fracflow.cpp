#include "fracflow/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace fracflow;
  CLI::App app{"Rothe-scheme solver and estimate verifier for the doubly nonlinear fractional p-Laplacian flow"};
  app.require_subcommand(1);

  std::string config_path;
  int levels = 3;
  double gamma = 1.0;
  long trials = 100000;
  std::uint64_t seed = 1;

  auto* run = app.add_subcommand("run", "Run the flow, write trace.csv and report.json");
  run->add_option("--config", config_path, "Config file (key = value lines)")->required();

  auto* converge = app.add_subcommand("converge", "Refinement study under h -> h/2, writes d_table.csv");
  converge->add_option("--config", config_path, "Config file (key = value lines)")->required();
  converge->add_option("--levels", levels, "Number of time steps h, h/2, ...")->check(CLI::Range(3, 12));
  converge->add_option("--gamma", gamma, "Exponent of the L^gamma distance");

  auto* ineq = app.add_subcommand("ineq", "Flow-independent inequality suite");
  ineq->add_option("--config", config_path, "Config file (key = value lines)")->required();
  ineq->add_option("--trials", trials, "Random pairs per algebraic inequality")->check(CLI::PositiveNumber);
  ineq->add_option("--seed", seed, "Seed of the random suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  RunConfig cfg;
  try {
    cfg = parse_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (*run) return cmd_run(cfg, std::cerr);
  if (*converge) return cmd_converge(cfg, levels, gamma, std::cerr);
  return cmd_ineq(cfg, trials, seed, std::cerr);
}
