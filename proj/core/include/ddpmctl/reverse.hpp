#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "ddpmctl/forward.hpp"
#include "ddpmctl/kernel.hpp"
#include "ddpmctl/policy.hpp"
#include "ddpmctl/sampling.hpp"
#include "ddpmctl/systems.hpp"

namespace ddpmctl {

/// States of the controlled system x <- x + dt * G(x) pi(t/T, x).
struct ReverseTrace {
  TimeGrid grid;
  double dt = 0.0;
  /// Every integration step 0..K when kept, otherwise only the snapshots.
  std::vector<Eigen::MatrixXd> steps;
  std::vector<std::size_t> snapshot_steps;
  std::vector<Ensemble> snapshots;
  /// Optional m x M controls applied at each step 0..K-1.
  std::vector<Eigen::MatrixXd> controls;

  [[nodiscard]] std::size_t step_count() const;
  [[nodiscard]] const Ensemble& final_state() const { return snapshots.back(); }
};

struct RolloutOptions {
  bool keep_steps = true;
  bool keep_controls = false;
};

/// Bytes needed to keep every step of a rollout: M * (T/dt + 1) * d * 8.
std::size_t rollout_memory_bytes(Eigen::Index particles, Eigen::Index dim, std::size_t steps);

ReverseTrace rollout(const Ensemble& init, const ControlAffineSystem& sys, const MlpPolicy& policy, double dt,
                     const TimeGrid& grid, RolloutOptions opts = {});

/// Per-instant blob KL between reverse snapshot t_i and forward snapshot at T - t_i.
std::vector<double> cost_terms(const ReverseTrace& rev, const ForwardTrace& fwd, const KernelConfig& kernel);

/// Mean of cost_terms.
double cost(const ReverseTrace& rev, const ForwardTrace& fwd, const KernelConfig& kernel);

struct CostGradient {
  double cost = 0.0;
  std::vector<double> terms;
  Eigen::VectorXd grad;
};

/// Cost and its exact discrete-adjoint gradient with respect to the policy
/// parameters. `rev` must come from rollout(..., sys, policy, ...) with
/// keep_steps enabled.
CostGradient cost_and_grad(const ReverseTrace& rev, const ForwardTrace& fwd, const ControlAffineSystem& sys,
                           const MlpPolicy& policy, const KernelConfig& kernel);

Eigen::VectorXd cost_grad(const ReverseTrace& rev, const ForwardTrace& fwd, const ControlAffineSystem& sys,
                          const MlpPolicy& policy, const KernelConfig& kernel);

/// Distribution of initial states for the reverse process.
struct InitialDistribution {
  std::variant<BoxDomain, GaussianSpec> law;

  [[nodiscard]] Ensemble sample(Eigen::Index count, std::uint64_t seed) const;
  [[nodiscard]] Eigen::Index dim() const;
};

struct TrainConfig {
  std::size_t epochs = 1;
  double dt = 0.01;
  std::size_t particles = 500;
  KernelConfig kernel;
  AdamState optimizer;  // hyperparameters; moments are sized on first use
  std::uint64_t seed = 0;
  /// Epoch to start from when resuming; the optimizer state must then carry
  /// its moments.
  std::size_t first_epoch = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double cost = 0.0;
  double final_kl = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  MlpPolicy policy;
  AdamState optimizer;
  TrainHistory history;
};

/// Called after each epoch with the record and the parameters before the update.
using EpochCallback = std::function<void(const EpochRecord&, const MlpPolicy&)>;

/// Seed used to draw the initial ensemble of a given epoch.
std::uint64_t epoch_seed(std::uint64_t master, std::size_t epoch);

/// Repeats rollout -> cost -> adjoint -> Adam for the configured epochs, drawing
/// a fresh initial ensemble each epoch.
TrainResult train(const TrainConfig& cfg, const ControlAffineSystem& sys, const ForwardTrace& fwd,
                  const MlpPolicy& initial_policy, const InitialDistribution& p_initial,
                  const EpochCallback& on_epoch = {});

struct EvalConfig {
  Eigen::Index particles = 2000;
  double dt = 0.01;
  double horizon = 1.0;
  KernelConfig kernel;
  std::uint64_t seed = 0;
};

/// Final ensemble of a fresh rollout from p_initial.
Ensemble evaluate_rollout(const MlpPolicy& policy, const ControlAffineSystem& sys,
                          const InitialDistribution& p_initial, const EvalConfig& cfg);

/// kl_blob(final ensemble | target).
double evaluate(const MlpPolicy& policy, const ControlAffineSystem& sys, const Ensemble& target,
                const InitialDistribution& p_initial, const EvalConfig& cfg);

}  // namespace ddpmctl
