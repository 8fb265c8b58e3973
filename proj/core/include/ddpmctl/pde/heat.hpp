#pragma once

#include "ddpmctl/pde/grid.hpp"

namespace ddpmctl::pde {

/// Cell-centered 5/7-point Laplacian; zero-flux walls contribute no flux.
Eigen::VectorXd laplacian(const GridSpec& grid, const Eigen::Ref<const Eigen::VectorXd>& values);

/// Largest explicit-Euler step for the heat equation: 1 / (2 sum_a h_a^-2).
double heat_stable_dt(const GridSpec& grid);

/// One explicit step of p_t = Laplacian(p). Rejects dt above heat_stable_dt.
GridField heat_step(const GridField& p, double dt);

}  // namespace ddpmctl::pde
