#include "ddpmctl/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ddpmctl/error.hpp"
#include "ddpmctl/parallel.hpp"
#include "ddpmctl/random.hpp"

namespace ddpmctl {

void DriftSpec::validate() const {
  if (kind == Kind::linear && !(k > 0.0 && std::isfinite(k))) {
    throw std::invalid_argument("linear drift needs k > 0");
  }
}

std::string DriftSpec::to_string() const {
  if (kind == Kind::zero) return "zero";
  std::ostringstream os;
  os.precision(17);
  os << "linear(k=" << k << ")";
  return os.str();
}

const Ensemble& ForwardTrace::at(double t) const {
  for (const auto& s : snapshots)
    if (std::abs(s.time - t) <= 1e-9 * std::max(1.0, grid.horizon)) return s;
  throw std::out_of_range("forward trace has no snapshot at t=" + std::to_string(t));
}

void reflect_inplace(Eigen::Ref<Eigen::VectorXd> x, const BoxDomain& domain) {
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (!domain.bounded[static_cast<std::size_t>(k)]) continue;
    const double lo = domain.lower[k];
    const double hi = domain.upper[k];
    const double width = hi - lo;
    double v = x[k];
    if (v >= lo && v <= hi) continue;
    // Mirror folding is periodic with period 2 * width.
    double s = std::fmod(v - lo, 2.0 * width);
    if (s < 0.0) s += 2.0 * width;
    v = s <= width ? lo + s : hi - (s - width);
    x[k] = std::clamp(v, lo, hi);
  }
}

Eigen::VectorXd reflect(const Eigen::Ref<const Eigen::VectorXd>& x, const BoxDomain& domain) {
  if (!x.allFinite()) throw std::domain_error("reflect: non-finite input");
  Eigen::VectorXd out = x;
  reflect_inplace(out, domain);
  return out;
}

ForwardTrace simulate_forward(const Ensemble& init, const ForwardConfig& cfg, const TimeGrid& grid) {
  init.validate();
  cfg.drift.validate();
  cfg.domain.validate();
  if (cfg.domain.dim() != init.dim()) throw std::invalid_argument("simulate_forward: domain dimension mismatch");
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma)) throw std::invalid_argument("simulate_forward: sigma must be >= 0");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("simulate_forward: dt must be positive");
  if (!cfg.domain.contains(init)) throw std::invalid_argument("simulate_forward: initial ensemble leaves the domain");

  const auto snap_steps = grid.step_indices(cfg.dt);
  const std::size_t steps = grid.step_count(cfg.dt);
  const Eigen::Index d = init.dim();
  const Eigen::Index count = init.size();

  ForwardTrace trace;
  trace.grid = grid;
  trace.config = cfg;
  trace.snapshots.reserve(grid.size());
  for (double t : grid.times) trace.snapshots.emplace_back(Eigen::MatrixXd(d, count), t);

  const double noise = cfg.sigma * std::sqrt(cfg.dt);
  const bool linear = cfg.drift.kind == DriftSpec::Kind::linear;
  const double decay = linear ? cfg.drift.k * cfg.dt : 0.0;

  parallel_for(0, static_cast<std::size_t>(count), [&](std::size_t pi) {
    const auto i = static_cast<Eigen::Index>(pi);
    Xoshiro256 rng(derive_seed(cfg.seed, pi, 0x666f7277ULL));
    Eigen::VectorXd x = init.particle(i);
    std::size_t next = 0;
    for (std::size_t n = 0; n <= steps; ++n) {
      while (next < snap_steps.size() && snap_steps[next] == n) {
        trace.snapshots[next].states.col(i) = x;
        ++next;
      }
      if (n == steps) break;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double drift = linear ? -decay * x[k] : 0.0;
        x[k] += drift + noise * rng.normal();
      }
      if (!x.allFinite()) {
        throw NumericalError("forward process: particle " + std::to_string(pi) + " became non-finite at step " +
                                 std::to_string(n),
                             n);
      }
      reflect_inplace(x, cfg.domain);
    }
  });
  return trace;
}

}  // namespace ddpmctl
