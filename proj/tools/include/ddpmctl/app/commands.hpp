#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ddpmctl/app/config.hpp"
#include "ddpmctl/app/io.hpp"
#include "ddpmctl/pde/tracking.hpp"
#include "ddpmctl/stats.hpp"

namespace ddpmctl::app {

/// A threshold or training check failed (exit code 1).
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Target samples of a run; also the forward trace's t = 0 snapshot.
Ensemble target_samples(const RunConfig& cfg);
ForwardTrace run_forward(const RunConfig& cfg);

struct ForwardSummary {
  ForwardTrace trace;
  Eigen::VectorXd final_variance;
  std::optional<ChiSquareResult> uniformity;
};

/// Simulates and writes snapshots/forward_NNN.csv plus manifest.json under `out`.
ForwardSummary cmd_forward(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Trains and writes config.json, history.csv, timing.csv and policy.json
/// under `out`. With `resume`, training continues from the checkpoint's epoch.
TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log,
                      const std::optional<std::filesystem::path>& resume = std::nullopt);

struct EvalMetrics {
  double final_kl = 0.0;
  std::optional<double> w2;
  double moment1 = 0.0;
  double moment2 = 0.0;
};

/// Evaluates a checkpoint and writes metrics.json under `out`.
EvalMetrics cmd_eval(const RunConfig& cfg, const std::filesystem::path& policy_path, const std::filesystem::path& out,
                     std::ostream& log);

/// "x1,x2,..." -> vector.
Eigen::VectorXd parse_point(const std::string& text);
int cmd_rank(const std::string& system, const Eigen::VectorXd& point, int depth);

struct PdeLevel {
  std::vector<int> cells;
  double dt = 0.0;
  pde::TrackingReport report;
};

struct PdeOutcome {
  std::vector<PdeLevel> levels;
  double constant_defect = 0.0;
  std::optional<pde::SpectralGap> gap;
  std::optional<double> improvement;
  bool passed = false;
  std::vector<std::string> failures;
};

/// Runs the tracking study and writes report.json under `out`.
PdeOutcome cmd_verify_pde(const PdeConfig& cfg, const std::filesystem::path& out, std::ostream& log);

}  // namespace ddpmctl::app
