#pragma once

#include <vector>

#include "ddpmctl/pde/poisson.hpp"
#include "ddpmctl/pde/sub_laplacian.hpp"

namespace ddpmctl::pde {

struct TrackingConfig {
  double horizon = 0.05;
  double dt = 0.0;  // must divide horizon and respect heat_stable_dt
  PoissonOptions poisson;
};

struct TrackingReport {
  std::vector<double> times;
  /// |p^c_t - p^f_{T-t}|_2 / |p^f_{T-t}|_2 at every step.
  std::vector<double> errors;
  double max_error = 0.0;
  /// max over steps of |(phi - mean phi) - (p^f_{T-t} - mean)|_inf; only
  /// meaningful for coordinate fields, where A is the negative Laplacian.
  double max_phi_offset = 0.0;
  double max_poisson_residual = 0.0;
  double min_density = 0.0;
  double max_cfl = 0.0;
  double mass_drift = 0.0;
  std::size_t steps = 0;
  std::size_t cg_iterations = 0;
  GridField final_density;
};

/// Heat flow forward from p_target over [0, T], then the controlled Liouville
/// equation in reverse: at each reverse time t solve A phi = -Laplacian(p^f_{T-t}),
/// set u_i = Y_i phi / p^c on faces and advance p^c with first-order upwind
/// fluxes of the velocity sum_i g_i u_i. Throws NumericalError if p^c drops
/// below 1e-12.
TrackingReport exact_tracking_run(const GridField& p_target, const SubLaplacian& ops, const TrackingConfig& cfg);

/// One explicit upwind Liouville step with face controls derived from phi.
/// Returns the CFL number max_c dt * sum(outflow speeds / h).
double liouville_step(GridField& p, const SubLaplacian& ops, const Eigen::Ref<const Eigen::VectorXd>& phi, double dt);

}  // namespace ddpmctl::pde
