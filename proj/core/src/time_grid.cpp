#include "ddpmctl/time_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ddpmctl {

TimeGrid TimeGrid::uniform(double horizon, std::size_t n) {
  if (n < 2) throw std::invalid_argument("TimeGrid::uniform: need at least 2 instants");
  TimeGrid g;
  g.horizon = horizon;
  g.times.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.times[i] = horizon * static_cast<double>(i) / static_cast<double>(n - 1);
  g.times.back() = horizon;
  g.validate();
  return g;
}

void TimeGrid::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("time grid: horizon must be positive");
  if (times.empty()) throw std::invalid_argument("time grid: no instants");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || times[i] > horizon * (1.0 + 1e-12)) {
      throw std::invalid_argument("time grid: instant outside [0, horizon]");
    }
    if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("time grid: instants must ascend");
  }
}

namespace {
std::size_t as_multiple(double t, double dt, double scale) {
  const double k = std::round(t / dt);
  if (std::abs(t - k * dt) > 1e-12 * std::max(1.0, scale)) {
    throw std::invalid_argument("time " + std::to_string(t) + " is not a multiple of dt " + std::to_string(dt));
  }
  return static_cast<std::size_t>(k);
}
}  // namespace

std::size_t TimeGrid::step_count(double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  return as_multiple(horizon, dt, horizon);
}

std::vector<std::size_t> TimeGrid::step_indices(double dt) const {
  validate();
  (void)step_count(dt);
  std::vector<std::size_t> idx;
  idx.reserve(times.size());
  for (double t : times) idx.push_back(as_multiple(t, dt, horizon));
  return idx;
}

}  // namespace ddpmctl
