#include "ddpmctl/pde/grid.hpp"

#include <numbers>
#include <stdexcept>

namespace ddpmctl::pde {

void GridSpec::validate() const {
  const auto k = cells.size();
  if (k < 1 || lower.size() != k || upper.size() != k || boundary.size() != k) {
    throw std::invalid_argument("grid: cells/lower/upper/boundary sizes differ");
  }
  for (std::size_t a = 0; a < k; ++a) {
    if (cells[a] < 2) throw std::invalid_argument("grid: need at least 2 cells per axis");
    if (!(upper[a] > lower[a])) throw std::invalid_argument("grid: need lower < upper");
  }
}

Eigen::Index GridSpec::size() const {
  Eigen::Index n = 1;
  for (int c : cells) n *= c;
  return n;
}

double GridSpec::spacing(int axis) const {
  const auto a = static_cast<std::size_t>(axis);
  return (upper[a] - lower[a]) / cells[a];
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dims(); ++a) v *= spacing(a);
  return v;
}

Eigen::Index GridSpec::stride(int axis) const {
  Eigen::Index s = 1;
  for (int a = 0; a < axis; ++a) s *= cells[static_cast<std::size_t>(a)];
  return s;
}

int GridSpec::coord(Eigen::Index cell, int axis) const {
  return static_cast<int>((cell / stride(axis)) % cells[static_cast<std::size_t>(axis)]);
}

Eigen::VectorXd GridSpec::center(Eigen::Index cell) const {
  Eigen::VectorXd x(dims());
  for (int a = 0; a < dims(); ++a) x[a] = lower[static_cast<std::size_t>(a)] + (coord(cell, a) + 0.5) * spacing(a);
  return x;
}

std::optional<Eigen::Index> GridSpec::neighbor(Eigen::Index cell, int axis, int dir) const {
  const auto a = static_cast<std::size_t>(axis);
  const int c = coord(cell, axis);
  const int n = cells[a];
  int target = c + dir;
  if (target < 0 || target >= n) {
    if (boundary[a] == Boundary::zero_flux) return std::nullopt;
    target = (target + n) % n;
  }
  return cell + static_cast<Eigen::Index>(target - c) * stride(axis);
}

void GridField::validate() const {
  grid.validate();
  if (values.size() != grid.size()) throw std::invalid_argument("grid field: value count does not match grid");
  if (!values.allFinite()) throw std::invalid_argument("grid field: non-finite values");
}

GridField mode_density(const GridSpec& grid, double floor, const std::vector<DensityMode>& modes) {
  grid.validate();
  GridField p{grid, Eigen::VectorXd(grid.size())};
  for (Eigen::Index c = 0; c < grid.size(); ++c) {
    double v = floor;
    for (const auto& mode : modes) {
      if (static_cast<int>(mode.wavenumbers.size()) != grid.dims()) {
        throw std::invalid_argument("density mode: wavenumber count must equal grid dimension");
      }
      double term = mode.amplitude;
      for (int a = 0; a < grid.dims(); ++a) {
        const auto sa = static_cast<std::size_t>(a);
        const double xi = (grid.coord(c, a) + 0.5) / grid.cells[sa];
        const double k = mode.wavenumbers[sa];
        term *= grid.boundary[sa] == Boundary::periodic ? std::cos(2.0 * std::numbers::pi * k * xi)
                                                         : std::cos(std::numbers::pi * k * xi);
      }
      v += term;
    }
    p.values[c] = v;
  }
  if (p.values.minCoeff() <= 0.0) throw std::invalid_argument("density modes give a non-positive density");
  p.values /= p.mass();
  return p;
}

GridField uniform_density(const GridSpec& grid) {
  grid.validate();
  GridField p{grid, Eigen::VectorXd::Ones(grid.size())};
  p.values /= p.mass();
  return p;
}

}  // namespace ddpmctl::pde
