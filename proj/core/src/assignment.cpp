#include <limits>
#include <stdexcept>
#include <vector>

#include "ddpmctl/divergence.hpp"

namespace ddpmctl {

// Hungarian algorithm with row/column potentials, O(n^3).
std::vector<Eigen::Index> solve_assignment(const Eigen::MatrixXd& cost) {
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw std::invalid_argument("solve_assignment: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  const auto N = static_cast<std::size_t>(n);

  // 1-based internally; column 0 is a virtual start.
  std::vector<double> u(N + 1, 0.0), v(N + 1, 0.0), minv(N + 1);
  std::vector<std::size_t> owner(N + 1, 0), way(N + 1, 0);
  std::vector<char> used(N + 1);

  for (std::size_t row = 1; row <= N; ++row) {
    owner[0] = row;
    std::size_t col0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t r0 = owner[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= N; ++c) {
        if (used[c]) continue;
        const double cur = cost(static_cast<Eigen::Index>(r0 - 1), static_cast<Eigen::Index>(c - 1)) - u[r0] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= N; ++c) {
        if (used[c]) {
          u[owner[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<Eigen::Index> match(N);
  for (std::size_t c = 1; c <= N; ++c) match[owner[c] - 1] = static_cast<Eigen::Index>(c - 1);
  return match;
}

}  // namespace ddpmctl
