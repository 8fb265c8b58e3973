#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddpmctl/forward.hpp"
#include "ddpmctl/pde/grid.hpp"
#include "ddpmctl/pde/poisson.hpp"
#include "ddpmctl/policy.hpp"
#include "ddpmctl/reverse.hpp"
#include "ddpmctl/sampling.hpp"
#include "ddpmctl/systems.hpp"

namespace ddpmctl::app {

/// Invalid or unreadable configuration (exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string experiment = "run";
  std::string system;
  BoxDomain domain;
  GaussianSpec target;
  InitialDistribution initial;
  DriftSpec drift;
  double sigma = 1.4142135623730951;
  double horizon = 1.0;
  double dt = 0.01;
  std::size_t measurements = 10;
  std::size_t train_size = 500;
  std::optional<double> bandwidth;
  std::vector<int> hidden{64, 64};
  AdamState optimizer;
  std::size_t epochs = 100;
  std::size_t eval_size = 2000;
  std::optional<double> kl_threshold;
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 1;
  bool save_snapshots = false;

  /// Configured bandwidth, or 0.2 times the mean half-width of the domain.
  [[nodiscard]] double kernel_bandwidth() const;
  [[nodiscard]] KernelConfig kernel() const { return {kernel_bandwidth()}; }
  [[nodiscard]] TimeGrid time_grid() const { return TimeGrid::uniform(horizon, measurements); }
  [[nodiscard]] ForwardConfig forward_config() const;
  [[nodiscard]] TrainConfig train_config() const;
  [[nodiscard]] EvalConfig eval_config() const;
  [[nodiscard]] std::vector<int> layer_sizes() const;

  // Seeds of the independent random streams of one run.
  [[nodiscard]] std::uint64_t target_seed() const;
  [[nodiscard]] std::uint64_t noise_seed() const;
  [[nodiscard]] std::uint64_t init_seed() const;
  [[nodiscard]] std::uint64_t train_seed() const;

  /// Throws ConfigError when any field violates a module precondition.
  void validate() const;
};

/// Parses JSON text; unknown keys are errors.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Complete JSON echo with defaults filled in; parses back to the same config.
std::string to_json(const RunConfig& cfg);

struct PdeThresholds {
  double max_error = 1e-2;
  double min_improvement = 2.0;
  double phi_offset = 1e-7;
  double poisson_residual = 1e-8;
  double constant_defect = 1e-10;
};

struct PdeConfig {
  std::string name = "pde";
  std::string system;
  pde::GridSpec grid;
  /// Cell counts of the refined level; empty for a single level.
  std::vector<int> refined_cells;
  double horizon = 0.02;
  /// Explicit step for the coarse level; otherwise dt_safety times the
  /// stability bound, shrunk so that it divides the horizon.
  std::optional<double> dt;
  double dt_safety = 0.9;
  /// Refined step = coarse step / refine_dt_factor.
  double refine_dt_factor = 4.0;
  double floor = 1.0;
  std::vector<pde::DensityMode> modes;
  pde::PoissonOptions poisson;
  bool spectral_gap = false;
  bool check_phi = false;
  PdeThresholds thresholds;
  std::uint64_t seed = 0;

  [[nodiscard]] double coarse_dt() const;
  void validate() const;
};

PdeConfig parse_pde_config(const std::string& text);
PdeConfig load_pde_config(const std::filesystem::path& path);

}  // namespace ddpmctl::app
