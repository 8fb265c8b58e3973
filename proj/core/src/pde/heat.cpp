#include "ddpmctl/pde/heat.hpp"

#include <stdexcept>
#include <string>

namespace ddpmctl::pde {

Eigen::VectorXd laplacian(const GridSpec& grid, const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() != grid.size()) throw std::invalid_argument("laplacian: size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(values.size());
  for (int a = 0; a < grid.dims(); ++a) {
    const double inv_h2 = 1.0 / (grid.spacing(a) * grid.spacing(a));
    // Sweep over faces so each flux is added and subtracted exactly once.
    for (Eigen::Index c = 0; c < grid.size(); ++c) {
      const auto up = grid.neighbor(c, a, +1);
      if (!up) continue;
      const double flux = (values[*up] - values[c]) * inv_h2;
      out[c] += flux;
      out[*up] -= flux;
    }
  }
  return out;
}

double heat_stable_dt(const GridSpec& grid) {
  double s = 0.0;
  for (int a = 0; a < grid.dims(); ++a) s += 1.0 / (grid.spacing(a) * grid.spacing(a));
  return 1.0 / (2.0 * s);
}

GridField heat_step(const GridField& p, double dt) {
  const double limit = heat_stable_dt(p.grid);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    throw std::invalid_argument("heat_step: dt=" + std::to_string(dt) + " violates the stability bound " +
                                std::to_string(limit));
  }
  GridField next{p.grid, p.values + dt * laplacian(p.grid, p.values)};
  return next;
}

}  // namespace ddpmctl::pde
