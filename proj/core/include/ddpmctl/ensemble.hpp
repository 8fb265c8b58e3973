#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace ddpmctl {

/// M particles in R^d stored column-wise (d x M), plus the time they refer to.
struct Ensemble {
  Eigen::MatrixXd states;
  double time = 0.0;

  Ensemble() = default;
  Ensemble(Eigen::MatrixXd s, double t) : states(std::move(s)), time(t) {}

  [[nodiscard]] Eigen::Index dim() const noexcept { return states.rows(); }
  [[nodiscard]] Eigen::Index size() const noexcept { return states.cols(); }
  [[nodiscard]] auto particle(Eigen::Index i) const { return states.col(i); }
  [[nodiscard]] auto particle(Eigen::Index i) { return states.col(i); }

  /// Throws std::invalid_argument if empty or any coordinate is non-finite.
  void validate() const;
};

/// Axis-aligned box; coordinates with bounded[k] == false are unconstrained.
struct BoxDomain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<bool> bounded;

  static BoxDomain cube(Eigen::Index d, double lo, double hi);
  static BoxDomain unbounded(Eigen::Index d);

  [[nodiscard]] Eigen::Index dim() const noexcept { return lower.size(); }
  [[nodiscard]] bool all_bounded() const;
  [[nodiscard]] bool any_bounded() const;
  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  [[nodiscard]] bool contains(const Ensemble& e) const;

  /// Geometric mean of the half-widths over bounded coordinates (1 if none).
  [[nodiscard]] double mean_half_width() const;

  void validate() const;
};

}  // namespace ddpmctl
