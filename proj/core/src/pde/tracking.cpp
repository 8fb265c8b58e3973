#include "ddpmctl/pde/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ddpmctl/error.hpp"
#include "ddpmctl/pde/heat.hpp"

namespace ddpmctl::pde {

double liouville_step(GridField& p, const SubLaplacian& ops, const Eigen::Ref<const Eigen::VectorXd>& phi, double dt) {
  const GridSpec& grid = ops.grid;
  const auto n_faces = static_cast<Eigen::Index>(ops.faces.size());
  Eigen::VectorXd velocity = ops.flux * phi;
  for (Eigen::Index f = 0; f < n_faces; ++f) {
    const Face& face = ops.faces[static_cast<std::size_t>(f)];
    velocity[f] /= 0.5 * (p.values[face.cell] + p.values[face.upper]);
  }

  Eigen::VectorXd outflow = Eigen::VectorXd::Zero(grid.size());
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(grid.size());
  for (Eigen::Index f = 0; f < n_faces; ++f) {
    const Face& face = ops.faces[static_cast<std::size_t>(f)];
    const double v = velocity[f];
    const double inv_h = 1.0 / grid.spacing(face.axis);
    const double flux = v > 0.0 ? v * p.values[face.cell] : v * p.values[face.upper];
    delta[face.cell] -= flux * inv_h;
    delta[face.upper] += flux * inv_h;
    if (v > 0.0) outflow[face.cell] += v * inv_h;
    else outflow[face.upper] -= v * inv_h;
  }
  p.values.noalias() += dt * delta;
  return dt * outflow.maxCoeff();
}

namespace {

// Heat flow snapshots with sqrt(N) checkpoints; segments are recomputed on demand.
class HeatHistory {
 public:
  HeatHistory(const GridField& p0, double dt, std::size_t steps) : grid_(p0.grid), dt_(dt), steps_(steps) {
    stride_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(steps)))));
    Eigen::VectorXd p = p0.values;
    for (std::size_t k = 0; k <= steps; ++k) {
      if (k % stride_ == 0) checkpoints_.push_back(p);
      if (k < steps) p += dt_ * laplacian(grid_, p);
    }
  }

  const Eigen::VectorXd& at(std::size_t k) {
    const std::size_t seg = k / stride_;
    if (seg != cached_) {
      segment_.clear();
      Eigen::VectorXd p = checkpoints_[seg];
      const std::size_t begin = seg * stride_;
      const std::size_t end = std::min(steps_, begin + stride_ - 1);
      for (std::size_t j = begin; j <= end; ++j) {
        segment_.push_back(p);
        if (j < end) p += dt_ * laplacian(grid_, p);
      }
      cached_ = seg;
    }
    return segment_[k - seg * stride_];
  }

 private:
  GridSpec grid_;
  double dt_;
  std::size_t steps_;
  std::size_t stride_ = 1;
  std::vector<Eigen::VectorXd> checkpoints_;
  std::vector<Eigen::VectorXd> segment_;
  std::size_t cached_ = static_cast<std::size_t>(-1);
};

}  // namespace

TrackingReport exact_tracking_run(const GridField& p_target, const SubLaplacian& ops, const TrackingConfig& cfg) {
  p_target.validate();
  const GridSpec& grid = ops.grid;
  if (p_target.values.size() != grid.size()) throw std::invalid_argument("tracking: target does not match the operator grid");
  if (p_target.values.minCoeff() <= 0.0) throw std::invalid_argument("tracking: target density must be strictly positive");
  if (!(cfg.horizon > 0.0) || !(cfg.dt > 0.0)) throw std::invalid_argument("tracking: horizon and dt must be positive");
  const double limit = heat_stable_dt(grid);
  if (cfg.dt > limit * (1.0 + 1e-12)) {
    throw std::invalid_argument("tracking: dt=" + std::to_string(cfg.dt) + " violates the stability bound " +
                                std::to_string(limit));
  }
  const double ratio = cfg.horizon / cfg.dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio) {
    throw std::invalid_argument("tracking: dt must divide the horizon");
  }

  HeatHistory history(p_target, cfg.dt, steps);
  TrackingReport rep;
  rep.steps = steps;
  GridField pc{grid, history.at(steps)};
  const double mass0 = pc.mass();
  rep.min_density = pc.values.minCoeff();
  rep.times.push_back(0.0);
  rep.errors.push_back(0.0);

  std::optional<Eigen::VectorXd> warm;
  for (std::size_t n = 0; n < steps; ++n) {
    const Eigen::VectorXd pf = history.at(steps - n);
    Eigen::VectorXd f = -laplacian(grid, pf);
    f.array() -= f.mean();
    auto sol = solve_poisson_zero_mean(ops.op, f, cfg.poisson, warm);
    rep.cg_iterations += sol.iterations;
    rep.max_poisson_residual = std::max(rep.max_poisson_residual, sol.residual);
    const Eigen::VectorXd offset = sol.solution - project_zero_mean(pf);
    rep.max_phi_offset = std::max(rep.max_phi_offset, offset.cwiseAbs().maxCoeff());

    rep.max_cfl = std::max(rep.max_cfl, liouville_step(pc, ops, sol.solution, cfg.dt));
    warm = std::move(sol.solution);

    const double lowest = pc.values.minCoeff();
    rep.min_density = std::min(rep.min_density, lowest);
    if (!std::isfinite(lowest) || lowest < 1e-12) {
      throw NumericalError("tracking: controlled density lost positivity (min " + std::to_string(lowest) +
                               ") at step " + std::to_string(n + 1),
                           n + 1);
    }
    const Eigen::VectorXd& ref = history.at(steps - n - 1);
    const double err = (pc.values - ref).norm() / ref.norm();
    rep.times.push_back(static_cast<double>(n + 1) * cfg.dt);
    rep.errors.push_back(err);
    rep.max_error = std::max(rep.max_error, err);
  }
  rep.mass_drift = std::abs(pc.mass() - mass0);
  rep.final_density = std::move(pc);
  return rep;
}

}  // namespace ddpmctl::pde
