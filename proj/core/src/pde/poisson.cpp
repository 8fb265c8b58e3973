#include "ddpmctl/pde/poisson.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "ddpmctl/error.hpp"
#include "ddpmctl/random.hpp"

namespace ddpmctl::pde {

Eigen::VectorXd project_zero_mean(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.array() - v.mean();
}

PoissonResult solve_poisson_zero_mean(const SparseOperator& a, const Eigen::Ref<const Eigen::VectorXd>& f,
                                      const PoissonOptions& opts, const std::optional<Eigen::VectorXd>& initial_guess) {
  const Eigen::Index n = a.size();
  if (f.size() != n) throw std::invalid_argument("poisson: right-hand side size mismatch");
  if (std::abs(f.mean()) > 1e-10 * std::max(1.0, f.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("poisson: right-hand side must have zero mean");
  }
  PoissonResult res;
  const Eigen::VectorXd rhs = project_zero_mean(f);
  const double fnorm = rhs.norm();
  if (fnorm == 0.0) {
    res.solution = Eigen::VectorXd::Zero(n);
    return res;
  }

  Eigen::VectorXd x = initial_guess ? project_zero_mean(*initial_guess) : Eigen::VectorXd::Zero(n);
  if (x.size() != n) throw std::invalid_argument("poisson: initial guess size mismatch");
  Eigen::VectorXd r = project_zero_mean(rhs - a.apply(x));
  Eigen::VectorXd p = r;
  Eigen::VectorXd ap(n);
  double rr = r.squaredNorm();
  const double target = opts.rel_tol * fnorm;
  std::size_t it = 0;
  while (std::sqrt(rr) > target && it < opts.max_iterations) {
    ap.noalias() = a.matrix * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    r.array() -= r.mean();
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    ++it;
  }
  x = project_zero_mean(x);
  res.iterations = it;
  res.residual = (a.apply(x) - rhs).norm() / fnorm;
  res.solution = std::move(x);
  if (res.residual > std::max(opts.rel_tol * 10.0, 1e-8)) {
    throw NumericalError("poisson: CG did not converge (relative residual " + std::to_string(res.residual) + " after " +
                             std::to_string(it) + " iterations)",
                         it);
  }
  return res;
}

SpectralGap spectral_gap(const SparseOperator& a, std::uint64_t seed, double rel_tol, std::size_t max_iterations) {
  const Eigen::Index n = a.size();
  Xoshiro256 rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  Eigen::VectorXd w = v;

  SpectralGap gap;
  // Top of the spectrum: Lanczos with full reorthogonalization; the largest
  // Ritz value converges far faster than plain power iteration.
  const Eigen::Index steps = std::min<Eigen::Index>(n, 120);
  Eigen::MatrixXd basis(n, steps);
  Eigen::VectorXd alpha(steps), beta(steps);
  Eigen::Index used = 0;
  w.normalize();
  double top = 0.0;
  for (Eigen::Index k = 0; k < steps; ++k) {
    basis.col(k) = w;
    Eigen::VectorXd aw = a.apply(w);
    alpha[k] = w.dot(aw);
    for (int pass = 0; pass < 2; ++pass) aw -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * aw);
    beta[k] = aw.norm();
    used = k + 1;
    if (beta[k] <= 1e-12 * std::abs(alpha[k])) break;
    w = aw / beta[k];
  }
  Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(used, used);
  for (Eigen::Index k = 0; k < used; ++k) {
    tri(k, k) = alpha[k];
    if (k + 1 < used) tri(k, k + 1) = tri(k + 1, k) = beta[k];
  }
  top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(tri, Eigen::EigenvaluesOnly).eigenvalues()[used - 1];
  gap.lambda_max = top;

  // Inverse iteration on the mean-zero subspace.
  v = project_zero_mean(v).normalized();
  double lambda = 0.0;
  PoissonOptions opts;
  opts.rel_tol = 1e-11;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    auto sol = solve_poisson_zero_mean(a, v, opts);
    v = project_zero_mean(sol.solution).normalized();
    const double next = v.dot(a.apply(v));
    gap.iterations = it + 1;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  gap.lambda2 = lambda;
  return gap;
}

}  // namespace ddpmctl::pde
