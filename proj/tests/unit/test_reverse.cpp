#include <gtest/gtest.h>

#include <cmath>

#include "ddpmctl/divergence.hpp"
#include "ddpmctl/error.hpp"
#include "ddpmctl/random.hpp"
#include "ddpmctl/reverse.hpp"

using namespace ddpmctl;

namespace {

MlpPolicy random_policy(std::vector<int> sizes, std::uint64_t seed, double scale = 0.5) {
  MlpPolicy p(sizes);
  Xoshiro256 g(seed);
  Eigen::VectorXd theta(p.params().size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = scale * g.normal();
  p.set_params(theta);
  return p;
}

Ensemble cloud(Eigen::Index d, Eigen::Index m, std::uint64_t seed, double scale = 1.0) {
  Xoshiro256 g(seed);
  Eigen::MatrixXd s(d, m);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = scale * g.normal();
  return {s, 0.0};
}

// Forward trace with arbitrary snapshots on a uniform grid.
ForwardTrace fake_forward(const TimeGrid& grid, Eigen::Index d, Eigen::Index m, std::uint64_t seed) {
  ForwardTrace f;
  f.grid = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Ensemble e = cloud(d, m, seed + i, 1.0 + 0.2 * static_cast<double>(i));
    e.time = grid.times[i];
    f.snapshots.push_back(e);
  }
  return f;
}

double cost_at(const MlpPolicy& p, const Eigen::VectorXd& theta, const Ensemble& init, const ControlAffineSystem& sys,
               double dt, const ForwardTrace& fwd, const KernelConfig& k) {
  MlpPolicy q = p;
  q.set_params(theta);
  return cost(rollout(init, sys, q, dt, fwd.grid), fwd, k);
}

Eigen::VectorXd fd_gradient(const MlpPolicy& p, const Ensemble& init, const ControlAffineSystem& sys, double dt,
                            const ForwardTrace& fwd, const KernelConfig& k) {
  Eigen::VectorXd g(p.params().size());
  const double h = 1e-6;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    Eigen::VectorXd tp = p.params(), tm = p.params();
    tp[j] += h;
    tm[j] -= h;
    g[j] = (cost_at(p, tp, init, sys, dt, fwd, k) - cost_at(p, tm, init, sys, dt, fwd, k)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Rollout, ZeroPolicyKeepsInitialState) {
  const auto sys = unicycle();
  const auto init = cloud(3, 10, 1);
  const auto rev = rollout(init, sys, MlpPolicy({4, 8, 2}), 0.1, TimeGrid::uniform(1.0, 3));
  for (const auto& s : rev.snapshots) EXPECT_EQ(s.states, init.states);
  EXPECT_EQ(rev.steps.size(), 11u);
  EXPECT_EQ(rev.step_count(), 10u);
}

TEST(Rollout, ConstantControlTranslates) {
  const auto sys = single_integrator(2);
  MlpPolicy p({3, 2});
  p.bias(0)[0] = 1.0;
  const auto init = cloud(2, 7, 2);
  const auto rev = rollout(init, sys, p, 0.01, TimeGrid::uniform(1.0, 2));
  Eigen::MatrixXd expected = init.states;
  expected.row(0).array() += 1.0;
  EXPECT_LT((rev.final_state().states - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rollout, UnicycleDrivesStraight) {
  const auto sys = unicycle();
  MlpPolicy p({4, 2});
  p.bias(0)[0] = 1.0;
  const Ensemble init(Eigen::MatrixXd::Zero(3, 1), 0.0);
  const auto rev = rollout(init, sys, p, 0.01, TimeGrid::uniform(1.0, 2));
  EXPECT_LT((rev.final_state().states.col(0) - Eigen::Vector3d(1, 0, 0)).norm(), 1e-9);
}

TEST(Rollout, SnapshotsAlignWithGrid) {
  const auto grid = TimeGrid::uniform(2.0, 5);
  const auto rev = rollout(cloud(2, 3, 1), single_integrator(2), random_policy({3, 4, 2}, 1), 0.1, grid);
  ASSERT_EQ(rev.snapshots.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(rev.snapshots[i].time, grid.times[i]);
    EXPECT_EQ(rev.snapshots[i].states, rev.steps[rev.snapshot_steps[i]]);
  }
}

TEST(Rollout, NonFiniteStateReportsStep) {
  MlpPolicy p({2, 1});
  p.bias(0)[0] = 1e308;
  const Ensemble init(Eigen::MatrixXd::Zero(1, 1), 0.0);
  try {
    rollout(init, single_integrator(1), p, 0.5, TimeGrid::uniform(4.0, 2));
    FAIL() << "expected a numerical error";
  } catch (const NumericalError& e) {
    ASSERT_TRUE(e.index().has_value());
    EXPECT_GE(*e.index(), 2u);
  }
}

TEST(Rollout, RejectsMismatch) {
  EXPECT_THROW(rollout(cloud(2, 3, 1), unicycle(), MlpPolicy({4, 2}), 0.1, TimeGrid::uniform(1, 2)),
               std::invalid_argument);
  EXPECT_THROW(rollout(cloud(3, 3, 1), unicycle(), MlpPolicy({4, 3}), 0.1, TimeGrid::uniform(1, 2)),
               std::invalid_argument);
  EXPECT_THROW(rollout(cloud(3, 3, 1), unicycle(), MlpPolicy({4, 2}), 0.3, TimeGrid::uniform(1, 2)),
               std::invalid_argument);
}

TEST(Rollout, MemoryBound) { EXPECT_EQ(rollout_memory_bytes(500, 5, 100), 500u * 101 * 5 * 8); }

TEST(Cost, ZeroWhenReverseRetracesForward) {
  const auto grid = TimeGrid::uniform(1.0, 4);
  const auto fwd = fake_forward(grid, 2, 6, 10);
  ReverseTrace rev;
  rev.grid = grid;
  rev.dt = 0.1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Ensemble e = fwd.snapshots[grid.size() - 1 - i];
    e.time = grid.times[i];
    rev.snapshots.push_back(e);
  }
  EXPECT_EQ(cost(rev, fwd, {0.5}), 0.0);
}

TEST(Cost, SingleTermHandValue) {
  ForwardTrace fwd;
  fwd.grid = TimeGrid::uniform(1.0, 2);
  fwd.snapshots = {Ensemble(Eigen::MatrixXd::Constant(1, 1, 1.0), 0.0), Ensemble(Eigen::MatrixXd::Zero(1, 1), 1.0)};
  ReverseTrace rev;
  rev.grid.horizon = 1.0;
  rev.grid.times = {1.0};
  rev.dt = 0.5;
  rev.snapshots = {Ensemble(Eigen::MatrixXd::Zero(1, 1), 1.0)};
  EXPECT_DOUBLE_EQ(cost(rev, fwd, {1.0}), 0.5);
}

TEST(Cost, InvariantUnderJointTranslation) {
  const auto grid = TimeGrid::uniform(1.0, 3);
  auto fwd = fake_forward(grid, 2, 8, 20);
  const auto rev0 = rollout(cloud(2, 8, 3), single_integrator(2), random_policy({3, 5, 2}, 4), 0.25, grid);
  const double base = cost(rev0, fwd, {0.6});
  auto rev = rev0;
  for (auto& s : rev.snapshots) s.states.array() += 3.0;
  for (auto& s : fwd.snapshots) s.states.array() += 3.0;
  EXPECT_NEAR(cost(rev, fwd, {0.6}), base, 1e-12 * std::max(1.0, std::abs(base)));
}

TEST(Cost, OffByOnePairingChangesCost) {
  const auto grid = TimeGrid::uniform(1.0, 4);
  const auto fwd = fake_forward(grid, 2, 8, 30);
  const auto rev = rollout(cloud(2, 8, 5), single_integrator(2), random_policy({3, 5, 2}, 6), 1.0 / 6.0, grid);
  // Pair t_i with T - t_{i+1} by shifting the forward snapshots one slot.
  ForwardTrace shifted = fwd;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    shifted.snapshots[i].states = fwd.snapshots[i + 1].states;
  }
  const double right = cost(rev, fwd, {0.5});
  EXPECT_GT(std::abs(cost(rev, shifted, {0.5}) - right), 1e-3);
  // The correct pairing, written out term by term.
  double manual = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    manual += kl_blob(rev.snapshots[i], fwd.snapshots[grid.size() - 1 - i], {0.5}).value / 4.0;
  }
  EXPECT_NEAR(right, manual, 1e-12);
}

TEST(Cost, MissingForwardInstantRejected) {
  const auto fwd = fake_forward(TimeGrid::uniform(1.0, 3), 2, 4, 1);
  const auto rev = rollout(cloud(2, 4, 1), single_integrator(2), MlpPolicy({3, 2}), 0.25, TimeGrid::uniform(1.0, 5));
  EXPECT_THROW(cost(rev, fwd, {0.5}), std::invalid_argument);
}

TEST(CostGrad, TinyInstanceMatchesFiniteDifferences) {
  const auto sys = single_integrator(2);
  const auto grid = TimeGrid::uniform(1.0, 2);
  const auto fwd = fake_forward(grid, 2, 4, 40);
  const auto init = cloud(2, 4, 41, 1.2);
  const auto p = random_policy({3, 5, 2}, 42);
  const KernelConfig k{0.8};
  const double dt = 1.0 / 8.0;
  const auto g = cost_grad(rollout(init, sys, p, dt, grid), fwd, sys, p, k);
  const auto fd = fd_gradient(p, init, sys, dt, fwd, k);
  EXPECT_LT((g - fd).norm() / fd.norm(), 1e-4);
}

TEST(CostGrad, EverySystemMatchesFiniteDifferences) {
  for (const auto* name : {"single_integrator_2", "unicycle", "chained_5d"}) {
    const auto sys = make_system(name);
    const auto d = sys.state_dim;
    const auto grid = TimeGrid::uniform(0.8, 3);
    const auto fwd = fake_forward(grid, d, 5, 50);
    const auto init = cloud(d, 5, 51, 0.8);
    const auto p = random_policy(MlpPolicy::architecture(d, {6}, sys.input_dim), 52, 0.4);
    const KernelConfig k{1.0};
    const auto g = cost_grad(rollout(init, sys, p, 0.1, grid), fwd, sys, p, k);
    const auto fd = fd_gradient(p, init, sys, 0.1, fwd, k);
    EXPECT_LT((g - fd).norm() / fd.norm(), 1e-4) << name;
  }
}

TEST(CostGrad, ZeroPolicyOnRetracedSnapshots) {
  // Every KL term is zero, but the estimator still couples particles, so the
  // gradient is not zero; it must still agree with finite differences.
  const auto grid = TimeGrid::uniform(1.0, 3);
  const auto init = cloud(2, 6, 60);
  ForwardTrace fwd;
  fwd.grid = grid;
  for (double t : grid.times) fwd.snapshots.emplace_back(init.states, t);
  const auto sys = single_integrator(2);
  const MlpPolicy p({3, 4, 2});
  const KernelConfig k{0.5};
  const auto cg = cost_and_grad(rollout(init, sys, p, 0.25, grid), fwd, sys, p, k);
  EXPECT_EQ(cg.cost, 0.0);
  const auto fd = fd_gradient(p, init, sys, 0.25, fwd, k);
  EXPECT_LT((cg.grad - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
}

TEST(CostGrad, RequiresKeptSteps) {
  const auto grid = TimeGrid::uniform(1.0, 2);
  const auto sys = single_integrator(2);
  const MlpPolicy p({3, 2});
  const auto rev = rollout(cloud(2, 3, 1), sys, p, 0.5, grid, {.keep_steps = false});
  EXPECT_THROW(cost_grad(rev, fake_forward(grid, 2, 3, 1), sys, p, {0.5}), std::invalid_argument);
}

TEST(CostGrad, StepSizeRefinementIsFirstOrder) {
  const auto sys = unicycle();
  const auto grid = TimeGrid::uniform(1.0, 3);
  const auto fwd = fake_forward(grid, 3, 6, 70);
  const auto init = cloud(3, 6, 71, 0.7);
  const auto p = random_policy({4, 6, 2}, 72, 0.5);
  const KernelConfig k{1.0};
  std::vector<Eigen::VectorXd> g;
  for (double dt : {0.05, 0.025, 0.0125}) g.push_back(cost_grad(rollout(init, sys, p, dt, grid), fwd, sys, p, k));
  const double ratio = (g[0] - g[1]).norm() / (g[1] - g[2]).norm();
  EXPECT_GT(ratio, 1.6);
  EXPECT_LT(ratio, 2.5);
}

TEST(Train, OneEpochEqualsManualComposition) {
  const auto sys = single_integrator(2);
  const auto grid = TimeGrid::uniform(1.0, 3);
  const auto fwd = fake_forward(grid, 2, 20, 80);
  const auto p0 = MlpPolicy::glorot({3, 8, 2}, 81);
  InitialDistribution init{BoxDomain::cube(2, -2, 2)};
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.dt = 0.1;
  cfg.particles = 20;
  cfg.kernel = {0.5};
  cfg.optimizer.lr = 0.01;
  cfg.seed = 3;
  const auto res = train(cfg, sys, fwd, p0, init);

  const auto x0 = init.sample(20, epoch_seed(3, 0));
  const auto rev = rollout(x0, sys, p0, 0.1, grid);
  const auto cg = cost_and_grad(rev, fwd, sys, p0, {0.5});
  const auto upd = adam_step(p0.params(), cg.grad, AdamState::for_params(p0.params().size(), 0.01));
  EXPECT_EQ(res.policy.params(), upd.params);
  ASSERT_EQ(res.history.epochs.size(), 1u);
  EXPECT_EQ(res.history.epochs[0].cost, cg.cost);
  EXPECT_EQ(res.history.epochs[0].final_kl, cg.terms.back());
}

TEST(Train, DeterministicAndResumable) {
  const auto sys = unicycle();
  const auto grid = TimeGrid::uniform(1.0, 3);
  const auto fwd = fake_forward(grid, 3, 15, 90);
  const auto p0 = MlpPolicy::glorot({4, 8, 2}, 91);
  InitialDistribution init{GaussianSpec{Eigen::VectorXd::Zero(3), 1.0}};
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.dt = 0.1;
  cfg.particles = 15;
  cfg.kernel = {0.7};
  cfg.optimizer.lr = 0.01;
  const auto a = train(cfg, sys, fwd, p0, init);
  const auto b = train(cfg, sys, fwd, p0, init);
  for (std::size_t e = 0; e < 6; ++e) EXPECT_EQ(a.history.epochs[e].cost, b.history.epochs[e].cost);

  TrainConfig first = cfg;
  first.epochs = 3;
  const auto part = train(first, sys, fwd, p0, init);
  TrainConfig rest = cfg;
  rest.first_epoch = 3;
  rest.optimizer = part.optimizer;
  const auto resumed = train(rest, sys, fwd, part.policy, init);
  ASSERT_EQ(resumed.history.epochs.size(), 3u);
  EXPECT_EQ(resumed.history.epochs[0].cost, a.history.epochs[3].cost);
  EXPECT_EQ(resumed.policy.params(), a.policy.params());
}

TEST(Train, RejectsBadConfig) {
  const auto sys = single_integrator(2);
  const auto fwd = fake_forward(TimeGrid::uniform(1.0, 2), 2, 5, 1);
  InitialDistribution init{BoxDomain::cube(2, -1, 1)};
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(train(cfg, sys, fwd, MlpPolicy({3, 2}), init), std::invalid_argument);
  cfg.epochs = 1;
  cfg.first_epoch = 1;
  cfg.epochs = 2;
  EXPECT_THROW(train(cfg, sys, fwd, MlpPolicy({3, 2}), init), std::invalid_argument);
}

TEST(Evaluate, ZeroPolicyOnTargetSamplesIsNearZero) {
  const auto sys = single_integrator(2);
  const GaussianSpec target{Eigen::VectorXd::Zero(2), 0.2};
  InitialDistribution init{target};
  EvalConfig ec;
  ec.particles = 2000;
  ec.dt = 0.1;
  ec.horizon = 1.0;
  ec.kernel = {0.8};
  for (std::uint64_t s = 0; s < 3; ++s) {
    ec.seed = 10 + s;
    const double kl = evaluate(MlpPolicy({3, 4, 2}), sys, sample_gaussian(target, 2000, 100 + s), init, ec);
    EXPECT_LT(std::abs(kl), 0.05);
  }
  ec.seed = 5;
  const MlpPolicy p = MlpPolicy::glorot({3, 4, 2}, 1);
  const auto t = sample_gaussian(target, 500, 1);
  EXPECT_EQ(evaluate(p, sys, t, init, ec), evaluate(p, sys, t, init, ec));
}
