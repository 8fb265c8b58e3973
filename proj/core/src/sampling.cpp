#include "ddpmctl/sampling.hpp"

#include <cmath>
#include <stdexcept>

#include "ddpmctl/random.hpp"

namespace ddpmctl {

void GaussianSpec::validate() const {
  if (mean.size() < 1) throw std::invalid_argument("gaussian: empty mean");
  if (!mean.allFinite()) throw std::invalid_argument("gaussian: non-finite mean");
  if (!(cov_scale > 0.0) || !std::isfinite(cov_scale)) {
    throw std::invalid_argument("gaussian: covariance scale must be positive");
  }
}

Ensemble sample_gaussian(const GaussianSpec& spec, Eigen::Index count, std::uint64_t seed) {
  spec.validate();
  if (count < 1) throw std::invalid_argument("sample_gaussian: need at least one sample");
  const double sd = std::sqrt(spec.cov_scale);
  Xoshiro256 rng(derive_seed(seed, 0x6761757373ULL));
  Eigen::MatrixXd s(spec.mean.size(), count);
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index k = 0; k < s.rows(); ++k) s(k, i) = spec.mean[k] + sd * rng.normal();
  return Ensemble(std::move(s), 0.0);
}

Ensemble sample_uniform(const BoxDomain& box, Eigen::Index count, std::uint64_t seed) {
  box.validate();
  if (!box.all_bounded()) throw std::invalid_argument("sample_uniform: every coordinate must be bounded");
  if (count < 1) throw std::invalid_argument("sample_uniform: need at least one sample");
  Xoshiro256 rng(derive_seed(seed, 0x756e69666fULL));
  Eigen::MatrixXd s(box.dim(), count);
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index k = 0; k < s.rows(); ++k)
      s(k, i) = box.lower[k] + (box.upper[k] - box.lower[k]) * rng.uniform();
  return Ensemble(std::move(s), 0.0);
}

}  // namespace ddpmctl
