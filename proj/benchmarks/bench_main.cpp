#include <benchmark/benchmark.h>

#include "ddpmctl/divergence.hpp"
#include "ddpmctl/pde/heat.hpp"
#include "ddpmctl/reverse.hpp"
#include "ddpmctl/sampling.hpp"
#include "ddpmctl/systems.hpp"

using namespace ddpmctl;

static void BM_KlBlob(benchmark::State& state) {
  const auto m = static_cast<Eigen::Index>(state.range(0));
  const auto q = sample_gaussian({Eigen::VectorXd::Zero(5), 1.0}, m, 1);
  const auto r = sample_gaussian({Eigen::VectorXd::Ones(5), 1.0}, m, 2);
  KernelConfig k;
  k.bandwidth = 0.5;
  const bool grad = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(kl_blob(q, r, k, grad).value);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KlBlob)->ArgsProduct({{100, 500, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);

static void BM_Rollout(benchmark::State& state) {
  const auto sys = make_system("chained_5d");
  const auto policy = MlpPolicy::glorot(MlpPolicy::architecture(5, {32, 32}, 2), 3);
  const auto init = sample_uniform(BoxDomain::cube(5, -4, 4), state.range(0), 4);
  const auto grid = TimeGrid::uniform(5.0, 10);
  const double dt = 5.0 / 9.0 / 4.0;
  for (auto _ : state) benchmark::DoNotOptimize(rollout(init, sys, policy, dt, grid).snapshots.size());
}
BENCHMARK(BM_Rollout)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_HeatStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  pde::GridSpec g{{n, n}, {0, 0}, {1, 1}, {pde::Boundary::zero_flux, pde::Boundary::zero_flux}};
  auto p = pde::mode_density(g, 1.0, {{0.5, {1, 2}}});
  const double dt = 0.9 * pde::heat_stable_dt(g);
  for (auto _ : state) {
    p = pde::heat_step(p, dt);
    benchmark::DoNotOptimize(p.values.data());
  }
}
BENCHMARK(BM_HeatStep)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK_MAIN();
