#pragma once

#include <Eigen/Core>

namespace ddpmctl {

/// Isotropic Gaussian smoothing kernel K_delta(r) = delta^-d K(r / delta).
struct KernelConfig {
  double bandwidth = 0.2;

  void validate() const;
};

/// (2 pi delta^2)^(-d/2) exp(-|r|^2 / (2 delta^2)).
double kernel_eval(const KernelConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& r);

/// log of the normalization constant (2 pi delta^2)^(-d/2).
double kernel_log_norm(const KernelConfig& cfg, Eigen::Index d);

}  // namespace ddpmctl
