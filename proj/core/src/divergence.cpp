#include "ddpmctl/divergence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ddpmctl/parallel.hpp"

namespace ddpmctl {

namespace {

// log sum_j exp(-|x - c_j|^2 / (2 delta^2)) over the columns c_j of `centers`.
// When `weights` is non-null it receives the normalized terms (a softmax).
double log_kernel_sum(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd& centers,
                      double inv_two_s2, double* weights, std::vector<double>& scratch) {
  const Eigen::Index d = centers.rows();
  const Eigen::Index n = centers.cols();
  scratch.resize(static_cast<std::size_t>(n));
  double top = -std::numeric_limits<double>::infinity();
  const double* c = centers.data();
  for (Eigen::Index j = 0; j < n; ++j) {
    double r2 = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double diff = x[k] - c[j * d + k];
      r2 += diff * diff;
    }
    const double e = -r2 * inv_two_s2;
    scratch[static_cast<std::size_t>(j)] = e;
    top = std::max(top, e);
  }
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w = std::exp(scratch[static_cast<std::size_t>(j)] - top);
    if (weights != nullptr) weights[j] = w;
    sum += w;
  }
  if (weights != nullptr) {
    const double inv = 1.0 / sum;
    for (Eigen::Index j = 0; j < n; ++j) weights[j] *= inv;
  }
  return top + std::log(sum);
}

void check_pair(const Ensemble& a, const Ensemble& b, const char* what) {
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) throw std::invalid_argument(std::string(what) + ": ensemble dimensions differ");
}

}  // namespace

BlobKlReport kl_blob(const Ensemble& q, const Ensemble& r, const KernelConfig& cfg, bool with_grad) {
  cfg.validate();
  check_pair(q, r, "kl_blob");
  const Eigen::Index mq = q.size();
  const Eigen::Index mr = r.size();
  const double s2 = cfg.bandwidth * cfg.bandwidth;
  const double inv_two_s2 = 0.5 / s2;

  Eigen::VectorXd terms(mq);
  // Column i holds the softmax weights of row i.
  Eigen::MatrixXd wq, wr;
  if (with_grad) {
    wq.resize(mq, mq);
    wr.resize(mr, mq);
  }

  const double log_ratio_counts = std::log(static_cast<double>(mr)) - std::log(static_cast<double>(mq));
  parallel_for(0, static_cast<std::size_t>(mq), [&](std::size_t pi) {
    const auto i = static_cast<Eigen::Index>(pi);
    thread_local std::vector<double> scratch;
    const auto xi = q.states.col(i);
    const double la = log_kernel_sum(xi, q.states, inv_two_s2, with_grad ? wq.col(i).data() : nullptr, scratch);
    const double lb = log_kernel_sum(xi, r.states, inv_two_s2, with_grad ? wr.col(i).data() : nullptr, scratch);
    terms[i] = la - lb + log_ratio_counts;
  });

  BlobKlReport report;
  report.value = terms.sum() / static_cast<double>(mq);
  if (with_grad) {
    const Eigen::MatrixXd& x = q.states;
    const Eigen::VectorXd col_mass = wq.rowwise().sum();  // sum_i a_ik, indexed by k
    Eigen::MatrixXd g = x * wq + x * wq.transpose() - x * col_mass.asDiagonal() - r.states * wr;
    g /= static_cast<double>(mq) * s2;
    report.grad = std::move(g);
  }
  return report;
}

double wasserstein2_exact(const Ensemble& p, const Ensemble& q) {
  check_pair(p, q, "wasserstein2_exact");
  if (p.size() != q.size()) throw std::invalid_argument("wasserstein2_exact: particle counts differ");
  if (p.size() > 512) throw std::invalid_argument("wasserstein2_exact: limited to 512 particles");
  const Eigen::Index n = p.size();
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (p.states.col(i) - q.states.col(j)).squaredNorm();
  const auto match = solve_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, match[static_cast<std::size_t>(i)]);
  return std::sqrt(total / static_cast<double>(n));
}

double moment_diff(const Ensemble& p, const Ensemble& q, int order) {
  check_pair(p, q, "moment_diff");
  if (order == 1) return (p.states.rowwise().mean() - q.states.rowwise().mean()).norm();
  if (order == 2) {
    const Eigen::MatrixXd mp = p.states * p.states.transpose() / static_cast<double>(p.size());
    const Eigen::MatrixXd mq = q.states * q.states.transpose() / static_cast<double>(q.size());
    return (mp - mq).norm();
  }
  throw std::invalid_argument("moment_diff: order must be 1 or 2");
}

}  // namespace ddpmctl
