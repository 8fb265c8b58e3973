#include "ddpmctl/kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ddpmctl {

void KernelConfig::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw std::invalid_argument("kernel bandwidth must be positive and finite");
  }
}

double kernel_log_norm(const KernelConfig& cfg, Eigen::Index d) {
  return -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * cfg.bandwidth * cfg.bandwidth);
}

double kernel_eval(const KernelConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& r) {
  cfg.validate();
  if (!r.allFinite()) throw std::domain_error("kernel_eval: non-finite argument");
  const double s2 = cfg.bandwidth * cfg.bandwidth;
  return std::exp(kernel_log_norm(cfg, r.size()) - 0.5 * r.squaredNorm() / s2);
}

}  // namespace ddpmctl
