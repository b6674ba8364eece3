#ifndef FRACFLOW_CONFIG_HPP
#define FRACFLOW_CONFIG_HPP

#include "fracflow/kernel.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracflow {

/// Invalid configuration; message carries the line number or the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckToggles {
  bool energy = true;
  bool time_derivative = true;
  bool max_principle = true;
  bool truncation = true;
  bool poincare = true;
  bool weak_residual = true;
  bool spacetime = true;
  bool chebyshev = true;
};

struct RunConfig {
  // grid
  int dim = 1;
  double omega_min = 0.0;
  double omega_max = 1.0;
  int n_cells = 64;
  double collar_factor = 2.0;
  // flow
  FlowParams flow;
  // initial datum
  std::string preset = "bump";
  double amplitude = 1.0;
  std::uint64_t seed = 1;
  std::string csv_path;
  // checks
  CheckToggles checks;
  std::vector<int> truncation_ells{2, 8, 32};
  int chebyshev_ell = 2;
  double s_prime = 0.25;
  double s_bar = 0.4;
  int t_grid = 8;
  // output
  std::string output_dir = ".";
  bool deterministic_reduction = true;

  /// Throws ConfigError naming the key and its admissible range.
  void validate() const;
};

/// Parses flat key = value lines ('#' starts a comment). Unknown keys,
/// duplicate keys and malformed values are errors.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

}  // namespace fracflow

#endif  // FRACFLOW_CONFIG_HPP
