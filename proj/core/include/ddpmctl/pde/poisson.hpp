#pragma once

#include <cstdint>
#include <optional>

#include "ddpmctl/pde/sub_laplacian.hpp"

namespace ddpmctl::pde {

struct PoissonOptions {
  double rel_tol = 1e-10;
  std::size_t max_iterations = 20000;
};

struct PoissonResult {
  Eigen::VectorXd solution;
  double residual = 0.0;  // |A phi - f| / |f|
  std::size_t iterations = 0;
};

/// Removes the arithmetic mean.
Eigen::VectorXd project_zero_mean(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Conjugate gradients on the mean-zero subspace for A phi = f. f must have
/// zero mean (|mean| <= 1e-10 * max(1, |f|_inf)). The solution has zero mean.
/// Throws NumericalError with the reached residual on non-convergence.
PoissonResult solve_poisson_zero_mean(const SparseOperator& a, const Eigen::Ref<const Eigen::VectorXd>& f,
                                      const PoissonOptions& opts = {},
                                      const std::optional<Eigen::VectorXd>& initial_guess = std::nullopt);

struct SpectralGap {
  double lambda2 = 0.0;
  double lambda_max = 0.0;
  std::size_t iterations = 0;
};

/// Smallest eigenvalue of A restricted to mean-zero vectors (inverse
/// iteration with CG solves) and the largest eigenvalue (power iteration).
SpectralGap spectral_gap(const SparseOperator& a, std::uint64_t seed = 7, double rel_tol = 1e-9,
                         std::size_t max_iterations = 200);

}  // namespace ddpmctl::pde
