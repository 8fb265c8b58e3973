#include "ddpmctl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace ddpmctl {

Eigen::VectorXd coordinate_variance(const Ensemble& e) {
  if (e.size() < 2) throw std::invalid_argument("variance: need at least two particles");
  const Eigen::VectorXd mean = e.states.rowwise().mean();
  const Eigen::MatrixXd centered = e.states.colwise() - mean;
  return centered.rowwise().squaredNorm() / static_cast<double>(e.size() - 1);
}

ChiSquareResult chi_square_uniformity(const Ensemble& e, const BoxDomain& box, int bins_per_axis) {
  box.validate();
  if (!box.all_bounded()) throw std::invalid_argument("chi-square: box must be bounded in every coordinate");
  if (box.dim() != e.dim()) throw std::invalid_argument("chi-square: dimension mismatch");
  if (bins_per_axis < 1) throw std::invalid_argument("chi-square: need at least one bin per axis");
  double cells_d = std::pow(static_cast<double>(bins_per_axis), static_cast<double>(e.dim()));
  if (cells_d < 2 || cells_d > 1e7) throw std::invalid_argument("chi-square: histogram needs 2..1e7 cells");
  const auto cells = static_cast<std::size_t>(cells_d);

  std::vector<double> counts(cells, 0.0);
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    std::size_t idx = 0;
    for (Eigen::Index k = e.dim() - 1; k >= 0; --k) {
      const double u = (e.states(k, i) - box.lower[k]) / (box.upper[k] - box.lower[k]);
      const int b = std::clamp(static_cast<int>(u * bins_per_axis), 0, bins_per_axis - 1);
      idx = idx * static_cast<std::size_t>(bins_per_axis) + static_cast<std::size_t>(b);
    }
    counts[idx] += 1.0;
  }
  const double expected = static_cast<double>(e.size()) / static_cast<double>(cells);
  ChiSquareResult r;
  for (double c : counts) r.statistic += (c - expected) * (c - expected) / expected;
  r.dof = static_cast<int>(cells) - 1;
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

}  // namespace ddpmctl
