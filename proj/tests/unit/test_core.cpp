#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "ddpmctl/ensemble.hpp"
#include "ddpmctl/kernel.hpp"
#include "ddpmctl/parallel.hpp"
#include "ddpmctl/random.hpp"
#include "ddpmctl/sampling.hpp"
#include "ddpmctl/stats.hpp"

using namespace ddpmctl;

TEST(Kernel, PeakOfUnitGaussian) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(1);
  EXPECT_NEAR(kernel_eval({1.0}, r), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(Kernel, Symmetric) {
  Eigen::VectorXd r(1);
  r << 0.73;
  EXPECT_EQ(kernel_eval({1.0}, r), kernel_eval({1.0}, -r));
}

TEST(Kernel, TwoDimensionalHandValue) {
  Eigen::Vector2d r(0.5, 0.0);
  const double by_hand = 1.0 / (2.0 * std::numbers::pi * 0.25) * std::exp(-0.25 / (2.0 * 0.25));
  EXPECT_NEAR(kernel_eval({0.5}, r), by_hand, 1e-15);
  EXPECT_NEAR(kernel_eval({0.5}, r), 0.3861, 1e-4);
}

TEST(Kernel, IntegratesToOne) {
  for (double delta : {0.3, 1.0}) {
    const double h = delta / 40.0;
    const int n = static_cast<int>(12.0 * delta / h);
    double one_d = 0.0, two_d = 0.0;
    Eigen::VectorXd r1(1);
    Eigen::Vector2d r2;
    for (int i = -n; i <= n; ++i) {
      r1[0] = i * h;
      one_d += kernel_eval({delta}, r1) * h;
      for (int j = -n; j <= n; ++j) {
        r2 << i * h, j * h;
        two_d += kernel_eval({delta}, r2) * h * h;
      }
    }
    EXPECT_NEAR(one_d, 1.0, 1e-6);
    EXPECT_NEAR(two_d, 1.0, 1e-6);
  }
}

TEST(Kernel, RejectsBadInput) {
  Eigen::VectorXd r(1);
  r << std::nan("");
  EXPECT_THROW(kernel_eval({1.0}, r), std::domain_error);
  r << 0.0;
  EXPECT_THROW(kernel_eval({0.0}, r), std::invalid_argument);
  EXPECT_THROW(kernel_eval({-1.0}, r), std::invalid_argument);
}

TEST(Random, DeterministicAndDistinctStreams) {
  Xoshiro256 a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(7, i, 3));
  EXPECT_EQ(seeds.size(), 1000u);
}

TEST(Random, NormalMoments) {
  Xoshiro256 g(5);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Sampling, GaussianMeanWithinBound) {
  GaussianSpec spec{Eigen::VectorXd::Zero(3), 0.2};
  const Ensemble e = sample_gaussian(spec, 10000, 11);
  const double bound = 3.0 * std::sqrt(0.2 / 10000.0);
  for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(e.states.row(k).mean()), std::max(bound, 0.02));
  const Eigen::VectorXd var = coordinate_variance(e);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(var[k], 0.2, 0.02);
}

TEST(Sampling, Deterministic) {
  GaussianSpec spec{Eigen::Vector2d(1.0, -1.0), 0.5};
  EXPECT_EQ(sample_gaussian(spec, 50, 3).states, sample_gaussian(spec, 50, 3).states);
  EXPECT_NE(sample_gaussian(spec, 50, 3).states, sample_gaussian(spec, 50, 4).states);
  const auto box = BoxDomain::cube(2, -1, 1);
  EXPECT_EQ(sample_uniform(box, 50, 3).states, sample_uniform(box, 50, 3).states);
}

TEST(Sampling, SingleParticle) {
  GaussianSpec spec{Eigen::VectorXd::Zero(2), 1.0};
  EXPECT_EQ(sample_gaussian(spec, 1, 0).size(), 1);
}

TEST(Sampling, RejectsInvalid) {
  EXPECT_THROW(sample_gaussian({Eigen::VectorXd::Zero(2), 0.0}, 10, 0), std::invalid_argument);
  EXPECT_THROW(sample_gaussian({Eigen::VectorXd::Zero(2), 1.0}, 0, 0), std::invalid_argument);
  EXPECT_THROW(sample_uniform(BoxDomain::unbounded(2), 10, 0), std::invalid_argument);
}

TEST(Sampling, UniformInsideBoxAndCentered) {
  const auto box5 = BoxDomain::cube(5, -4, 4);
  EXPECT_TRUE(box5.contains(sample_uniform(box5, 2000, 1)));
  const auto box = BoxDomain::cube(1, -1, 1);
  const Ensemble e = sample_uniform(box, 10000, 2);
  EXPECT_LT(std::abs(e.states.mean()), 3.0 / std::sqrt(3.0 * 10000));
}

TEST(Ensemble, Validation) {
  Ensemble empty(Eigen::MatrixXd(2, 0), 0.0);
  EXPECT_THROW(empty.validate(), std::invalid_argument);
  Ensemble bad(Eigen::MatrixXd::Constant(2, 2, std::nan("")), 0.0);
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_THROW(BoxDomain::cube(2, 1, -1).validate(), std::invalid_argument);
}

TEST(Parallel, CoversEveryIndexOnce) {
  for (std::size_t threads : {1u, 3u}) {
    set_thread_count(threads);
    std::vector<int> hits(1001, 0);
    parallel_for(0, hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  set_thread_count(0);
}

TEST(Stats, ChiSquareDetectsNonUniform) {
  const auto box = BoxDomain::cube(2, -1, 1);
  const auto uniform = sample_uniform(box, 20000, 9);
  EXPECT_GT(chi_square_uniformity(uniform, box, 10).p_value, 0.01);
  const auto peaked = sample_gaussian({Eigen::VectorXd::Zero(2), 0.1}, 20000, 9);
  Ensemble clipped = peaked;
  clipped.states = clipped.states.cwiseMax(-0.999).cwiseMin(0.999);
  EXPECT_LT(chi_square_uniformity(clipped, box, 10).p_value, 1e-6);
}
