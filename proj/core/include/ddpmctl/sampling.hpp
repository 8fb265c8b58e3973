#pragma once

#include <cstdint>

#include "ddpmctl/ensemble.hpp"

namespace ddpmctl {

/// N(mean, c * I).
struct GaussianSpec {
  Eigen::VectorXd mean;
  double cov_scale = 1.0;

  void validate() const;
};

Ensemble sample_gaussian(const GaussianSpec& spec, Eigen::Index count, std::uint64_t seed);

/// Uniform draws in a fully bounded box.
Ensemble sample_uniform(const BoxDomain& box, Eigen::Index count, std::uint64_t seed);

}  // namespace ddpmctl
