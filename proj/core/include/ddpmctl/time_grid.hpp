#pragma once

#include <cstddef>
#include <vector>

namespace ddpmctl {

/// Ascending measurement instants inside [0, horizon].
struct TimeGrid {
  std::vector<double> times;
  double horizon = 1.0;

  /// n >= 2 evenly spaced instants including both 0 and horizon, so the grid
  /// is closed under t -> horizon - t.
  static TimeGrid uniform(double horizon, std::size_t n);

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }

  /// Step indices round(t / dt); throws if an instant is not a multiple of dt
  /// or the horizon is not.
  [[nodiscard]] std::vector<std::size_t> step_indices(double dt) const;
  [[nodiscard]] std::size_t step_count(double dt) const;

  void validate() const;
};

}  // namespace ddpmctl
