#include "ddpmctl/ensemble.hpp"

#include <cmath>
#include <stdexcept>

namespace ddpmctl {

void Ensemble::validate() const {
  if (states.rows() < 1 || states.cols() < 1) {
    throw std::invalid_argument("ensemble must have at least one particle of dimension >= 1");
  }
  if (!states.allFinite()) throw std::invalid_argument("ensemble contains non-finite coordinates");
}

BoxDomain BoxDomain::cube(Eigen::Index d, double lo, double hi) {
  BoxDomain b{Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi),
              std::vector<bool>(static_cast<std::size_t>(d), true)};
  b.validate();
  return b;
}

BoxDomain BoxDomain::unbounded(Eigen::Index d) {
  return BoxDomain{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d),
                   std::vector<bool>(static_cast<std::size_t>(d), false)};
}

bool BoxDomain::all_bounded() const {
  for (bool b : bounded)
    if (!b) return false;
  return true;
}

bool BoxDomain::any_bounded() const {
  for (bool b : bounded)
    if (b) return true;
  return false;
}

bool BoxDomain::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  for (Eigen::Index k = 0; k < dim(); ++k) {
    if (!bounded[static_cast<std::size_t>(k)]) continue;
    if (x[k] < lower[k] || x[k] > upper[k]) return false;
  }
  return true;
}

bool BoxDomain::contains(const Ensemble& e) const {
  for (Eigen::Index i = 0; i < e.size(); ++i)
    if (!contains(e.particle(i))) return false;
  return true;
}

double BoxDomain::mean_half_width() const {
  double log_sum = 0.0;
  int n = 0;
  for (Eigen::Index k = 0; k < dim(); ++k) {
    if (!bounded[static_cast<std::size_t>(k)]) continue;
    log_sum += std::log(0.5 * (upper[k] - lower[k]));
    ++n;
  }
  return n == 0 ? 1.0 : std::exp(log_sum / n);
}

void BoxDomain::validate() const {
  if (lower.size() != upper.size() || static_cast<std::size_t>(lower.size()) != bounded.size()) {
    throw std::invalid_argument("box domain: lower/upper/bounded sizes differ");
  }
  for (Eigen::Index k = 0; k < dim(); ++k) {
    if (!bounded[static_cast<std::size_t>(k)]) continue;
    if (!(std::isfinite(lower[k]) && std::isfinite(upper[k]) && lower[k] < upper[k])) {
      throw std::invalid_argument("box domain: need finite lower < upper on bounded coordinates");
    }
  }
}

}  // namespace ddpmctl
