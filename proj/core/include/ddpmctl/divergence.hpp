#pragma once

#include <optional>

#include "ddpmctl/ensemble.hpp"
#include "ddpmctl/kernel.hpp"

namespace ddpmctl {

struct BlobKlReport {
  double value = 0.0;
  /// d x M_Q gradient of `value` with respect to the particles of Q.
  std::optional<Eigen::MatrixXd> grad;
};

/// Kernel-regularized KL estimate between two particle clouds:
///
///   (1/M_Q) sum_i log( (1/M_Q) sum_j K(x_i - x_j) / ((1/M_R) sum_j K(x_i - y_j)) )
///
/// with x in Q and y in R. The self term j = i stays in the numerator.
/// Row sums are evaluated with log-sum-exp, so well-separated clouds give a
/// large but finite value.
BlobKlReport kl_blob(const Ensemble& q, const Ensemble& r, const KernelConfig& cfg, bool with_grad = false);

/// Exact empirical W2 between equal-size clouds (Hungarian assignment on
/// squared distances). Limited to 512 particles.
double wasserstein2_exact(const Ensemble& p, const Ensemble& q);

/// Norm of the difference of raw empirical moments: order 1 compares means
/// (Euclidean norm), order 2 compares E[x x^T] (Frobenius norm).
double moment_diff(const Ensemble& p, const Ensemble& q, int order);

/// Minimum-cost perfect matching for a square cost matrix; returns the
/// column assigned to each row.
std::vector<Eigen::Index> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace ddpmctl
