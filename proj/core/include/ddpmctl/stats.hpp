#pragma once

#include "ddpmctl/ensemble.hpp"

namespace ddpmctl {

/// Unbiased per-coordinate sample variance.
Eigen::VectorXd coordinate_variance(const Ensemble& e);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  /// Upper-tail probability of the statistic.
  double p_value = 0.0;
};

/// Pearson test of uniformity on a bins^d histogram of a bounded box.
ChiSquareResult chi_square_uniformity(const Ensemble& e, const BoxDomain& box, int bins_per_axis);

}  // namespace ddpmctl
