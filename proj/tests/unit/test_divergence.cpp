#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ddpmctl/divergence.hpp"
#include "ddpmctl/parallel.hpp"
#include "ddpmctl/random.hpp"
#include "ddpmctl/sampling.hpp"

using namespace ddpmctl;

namespace {

// Direct evaluation of the estimator with plain sums of kernel values.
double kl_naive(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double delta) {
  const double d = static_cast<double>(x.rows());
  const double norm = std::pow(2.0 * M_PI * delta * delta, -d / 2.0);
  auto k = [&](const Eigen::VectorXd& r) { return norm * std::exp(-r.squaredNorm() / (2.0 * delta * delta)); };
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    double a = 0.0, b = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) a += k(x.col(i) - x.col(j));
    for (Eigen::Index j = 0; j < y.cols(); ++j) b += k(x.col(i) - y.col(j));
    total += std::log((a / x.cols()) / (b / y.cols()));
  }
  return total / x.cols();
}

Ensemble random_cloud(Eigen::Index d, Eigen::Index m, std::uint64_t seed, double scale = 1.0) {
  Xoshiro256 g(seed);
  Eigen::MatrixXd s(d, m);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = scale * g.normal();
  return {s, 0.0};
}

double w2_bruteforce(const Ensemble& p, const Ensemble& q) {
  std::vector<int> perm(static_cast<std::size_t>(p.size()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += (p.particle(static_cast<Eigen::Index>(i)) - q.particle(perm[i])).squaredNorm();
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / static_cast<double>(p.size()));
}

}  // namespace

TEST(BlobKl, SelfDivergenceIsExactlyZero) {
  const auto q = random_cloud(3, 200, 1);
  EXPECT_EQ(kl_blob(q, q, {0.5}).value, 0.0);
}

TEST(BlobKl, SingleParticleHandValue) {
  Ensemble q(Eigen::MatrixXd::Constant(1, 1, 0.0), 0.0);
  Ensemble r(Eigen::MatrixXd::Constant(1, 1, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(kl_blob(q, r, {1.0}).value, 0.5);
}

TEST(BlobKl, MatchesDirectSummation) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto q = random_cloud(2, 40, 10 + s);
    const auto r = random_cloud(2, 55, 20 + s, 1.5);
    const double fast = kl_blob(q, r, {0.7}).value;
    EXPECT_NEAR(fast, kl_naive(q.states, r.states, 0.7), 1e-12 * std::max(1.0, std::abs(fast)));
  }
}

TEST(BlobKl, FarApartCloudsStayFinite) {
  auto q = random_cloud(2, 20, 1, 0.1);
  auto r = random_cloud(2, 20, 2, 0.1);
  r.states.array() += 100.0;
  const auto rep = kl_blob(q, r, {0.2}, true);
  EXPECT_TRUE(std::isfinite(rep.value));
  EXPECT_GT(rep.value, 1e4);
  EXPECT_TRUE(rep.grad->allFinite());
}

TEST(BlobKl, GaussianPairNearClosedForm) {
  // KL(N(0,1) | N(1,1)) = 0.5; smoothing by delta = 0.2 shifts it to 0.5 / 1.04.
  double mean = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto q = sample_gaussian({Eigen::VectorXd::Zero(1), 1.0}, 3000, 100 + s);
    const auto r = sample_gaussian({Eigen::VectorXd::Ones(1), 1.0}, 3000, 200 + s);
    mean += kl_blob(q, r, {0.2}).value / 3.0;
  }
  EXPECT_NEAR(mean, 0.5, 0.1);
}

TEST(BlobKl, GradientMatchesFiniteDifferences) {
  const auto q = random_cloud(2, 12, 3);
  const auto r = random_cloud(2, 9, 4, 1.3);
  const KernelConfig k{0.6};
  const auto rep = kl_blob(q, r, k, true);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < q.states.size(); ++i) {
    Ensemble plus = q, minus = q;
    plus.states.data()[i] += h;
    minus.states.data()[i] -= h;
    const double fd = (kl_blob(plus, r, k).value - kl_blob(minus, r, k).value) / (2 * h);
    EXPECT_NEAR(rep.grad->data()[i], fd, 1e-7 + 1e-6 * std::abs(fd));
  }
}

TEST(BlobKl, TranslationInvariant) {
  auto q = random_cloud(3, 30, 5);
  auto r = random_cloud(3, 30, 6);
  // Dyadic values keep the shifted differences exact.
  q.states = (q.states * 64.0).array().round() / 64.0;
  r.states = (r.states * 64.0).array().round() / 64.0;
  const auto base = kl_blob(q, r, {0.5}, true);
  q.states.array() += 2.0;
  r.states.array() += 2.0;
  const auto moved = kl_blob(q, r, {0.5}, true);
  EXPECT_EQ(base.value, moved.value);
  EXPECT_LT((*base.grad - *moved.grad).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BlobKl, IndependentOfThreadCount) {
  const auto q = random_cloud(2, 300, 7);
  const auto r = random_cloud(2, 250, 8);
  set_thread_count(1);
  const auto a = kl_blob(q, r, {0.4}, true);
  set_thread_count(4);
  const auto b = kl_blob(q, r, {0.4}, true);
  set_thread_count(0);
  EXPECT_NEAR(a.value, b.value, 1e-10);
  EXPECT_LT((*a.grad - *b.grad).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BlobKl, RejectsMismatchedInputs) {
  EXPECT_THROW(kl_blob(random_cloud(2, 5, 1), random_cloud(3, 5, 1), {1.0}), std::invalid_argument);
  EXPECT_THROW(kl_blob(random_cloud(2, 5, 1), random_cloud(2, 5, 1), {0.0}), std::invalid_argument);
}

TEST(Wasserstein, MatchesBruteForce) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = random_cloud(2, 6, 30 + s);
    const auto q = random_cloud(2, 6, 40 + s, 2.0);
    EXPECT_NEAR(wasserstein2_exact(p, q), w2_bruteforce(p, q), 1e-12);
  }
}

TEST(Wasserstein, OneDimensionalSortedMatching) {
  const auto p = random_cloud(1, 300, 1);
  const auto q = random_cloud(1, 300, 2, 3.0);
  std::vector<double> a(p.states.data(), p.states.data() + 300), b(q.states.data(), q.states.data() + 300);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double c = 0.0;
  for (int i = 0; i < 300; ++i) c += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_NEAR(wasserstein2_exact(p, q), std::sqrt(c / 300), 1e-10);
}

TEST(Wasserstein, ZeroForPermutedCopyAndShiftForTranslation) {
  const auto p = random_cloud(3, 50, 3);
  Ensemble q(p.states.rowwise().reverse(), 0.0);
  EXPECT_NEAR(wasserstein2_exact(p, q), 0.0, 1e-12);
  Ensemble shifted = p;
  shifted.states.row(0).array() += 1.5;
  EXPECT_NEAR(wasserstein2_exact(p, shifted), 1.5, 1e-12);
  EXPECT_THROW(wasserstein2_exact(p, random_cloud(3, 51, 1)), std::invalid_argument);
  EXPECT_THROW(wasserstein2_exact(random_cloud(1, 513, 1), random_cloud(1, 513, 2)), std::invalid_argument);
}

TEST(Assignment, MatchesBruteForce) {
  Xoshiro256 g(9);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd c(5, 5);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = std::floor(10 * g.uniform());
    const auto match = solve_assignment(c);
    double got = 0.0;
    for (Eigen::Index i = 0; i < 5; ++i) got += c(i, match[static_cast<std::size_t>(i)]);
    std::vector<int> perm{0, 1, 2, 3, 4};
    double best = INFINITY;
    do {
      double s = 0.0;
      for (int i = 0; i < 5; ++i) s += c(i, perm[i]);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_EQ(got, best);
    std::vector<Eigen::Index> sorted = match;
    std::sort(sorted.begin(), sorted.end());
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
  }
}

TEST(MomentDiff, HandValues) {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, 3, 0, 0;
  b << 0, 0, 0, 0;
  const Ensemble p(a, 0), q(b, 0);
  EXPECT_DOUBLE_EQ(moment_diff(p, q, 1), 2.0);
  // E[x x^T] of p is diag(5, 0).
  EXPECT_DOUBLE_EQ(moment_diff(p, q, 2), 5.0);
  EXPECT_EQ(moment_diff(p, p, 1), 0.0);
  EXPECT_THROW(moment_diff(p, q, 3), std::invalid_argument);
}
