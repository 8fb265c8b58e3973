#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <vector>

namespace ddpmctl::pde {

enum class Boundary { zero_flux, periodic };

/// Regular cell-centered grid on a box; axis 0 varies fastest in the linear
/// cell index.
struct GridSpec {
  std::vector<int> cells;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Boundary> boundary;

  [[nodiscard]] int dims() const noexcept { return static_cast<int>(cells.size()); }
  [[nodiscard]] Eigen::Index size() const;
  [[nodiscard]] double spacing(int axis) const;
  [[nodiscard]] double cell_volume() const;
  [[nodiscard]] Eigen::Index stride(int axis) const;
  [[nodiscard]] int coord(Eigen::Index cell, int axis) const;
  [[nodiscard]] Eigen::VectorXd center(Eigen::Index cell) const;
  /// Neighbor across the +1 / -1 face on `axis`; empty at a zero-flux wall.
  [[nodiscard]] std::optional<Eigen::Index> neighbor(Eigen::Index cell, int axis, int dir) const;

  void validate() const;
};

/// Cell-centered scalar values on a grid.
struct GridField {
  GridSpec grid;
  Eigen::VectorXd values;

  [[nodiscard]] double mass() const { return values.sum() * grid.cell_volume(); }
  /// Discrete L2 norm including the cell volume.
  [[nodiscard]] double l2_norm() const { return values.norm() * std::sqrt(grid.cell_volume()); }
  void validate() const;
};

/// Cosine mode: amplitude * prod_a cos(k_a * pi * xi_a) on wall axes and
/// cos(2 pi k_a xi_a) on periodic axes, with xi_a in [0, 1].
struct DensityMode {
  double amplitude = 0.0;
  std::vector<int> wavenumbers;
};

/// floor + sum of modes, normalized to unit mass. Throws if the result is not
/// strictly positive.
GridField mode_density(const GridSpec& grid, double floor, const std::vector<DensityMode>& modes);

/// Uniform density with unit mass.
GridField uniform_density(const GridSpec& grid);

}  // namespace ddpmctl::pde
