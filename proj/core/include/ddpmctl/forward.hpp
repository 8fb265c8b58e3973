#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddpmctl/ensemble.hpp"
#include "ddpmctl/time_grid.hpp"

namespace ddpmctl {

/// Forward drift V(x): zero, or V(x) = -k x.
struct DriftSpec {
  enum class Kind { zero, linear };
  Kind kind = Kind::zero;
  double k = 1.0;

  static DriftSpec zero() { return {}; }
  static DriftSpec linear(double k) { return {Kind::linear, k}; }

  void validate() const;
  [[nodiscard]] std::string to_string() const;
};

struct ForwardConfig {
  DriftSpec drift;
  double sigma = 1.4142135623730951;
  double dt = 0.01;
  BoxDomain domain;
  std::uint64_t seed = 0;
};

/// Snapshots of the noised ensemble at the measurement instants.
struct ForwardTrace {
  TimeGrid grid;
  std::vector<Ensemble> snapshots;
  ForwardConfig config;

  /// Snapshot whose timestamp is within 1e-9 of t; throws std::out_of_range.
  [[nodiscard]] const Ensemble& at(double t) const;
};

/// Mirror-folds every bounded coordinate back into [lower, upper].
Eigen::VectorXd reflect(const Eigen::Ref<const Eigen::VectorXd>& x, const BoxDomain& domain);
void reflect_inplace(Eigen::Ref<Eigen::VectorXd> x, const BoxDomain& domain);

/// Euler-Maruyama for dX = V(X) dt + sigma dW, folded back into the domain
/// after each step. Each particle draws from its own stream keyed by
/// (seed, particle index), so results do not depend on the thread count.
ForwardTrace simulate_forward(const Ensemble& init, const ForwardConfig& cfg, const TimeGrid& grid);

}  // namespace ddpmctl
