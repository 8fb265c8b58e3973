#include "ddpmctl/reverse.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ddpmctl/divergence.hpp"
#include "ddpmctl/error.hpp"
#include "ddpmctl/parallel.hpp"

namespace ddpmctl {

std::size_t ReverseTrace::step_count() const {
  return snapshot_steps.empty() ? 0 : grid.step_count(dt);
}

std::size_t rollout_memory_bytes(Eigen::Index particles, Eigen::Index dim, std::size_t steps) {
  return static_cast<std::size_t>(particles) * (steps + 1) * static_cast<std::size_t>(dim) * sizeof(double);
}

ReverseTrace rollout(const Ensemble& init, const ControlAffineSystem& sys, const MlpPolicy& policy, double dt,
                     const TimeGrid& grid, RolloutOptions opts) {
  init.validate();
  if (init.dim() != sys.state_dim) throw std::invalid_argument("rollout: ensemble dimension does not match system");
  if (policy.state_dim() != sys.state_dim || policy.output_dim() != sys.input_dim) {
    throw std::invalid_argument("rollout: policy shape does not match system " + sys.name);
  }
  ReverseTrace rev;
  rev.grid = grid;
  rev.dt = dt;
  rev.snapshot_steps = grid.step_indices(dt);
  const std::size_t K = grid.step_count(dt);
  const double T = grid.horizon;
  const Eigen::Index d = sys.state_dim;
  const Eigen::Index m = sys.input_dim;
  const Eigen::Index count = init.size();

  Eigen::MatrixXd x = init.states;
  if (opts.keep_steps) rev.steps.reserve(K + 1);
  std::size_t next = 0;
  auto record = [&](std::size_t n) {
    if (opts.keep_steps) rev.steps.push_back(x);
    while (next < rev.snapshot_steps.size() && rev.snapshot_steps[next] == n) {
      rev.snapshots.emplace_back(x, grid.times[next]);
      ++next;
    }
  };

  record(0);
  for (std::size_t n = 0; n < K; ++n) {
    const double tau = static_cast<double>(n) * dt / T;
    const Eigen::MatrixXd u = policy_forward(policy, tau, x);
    parallel_for(0, static_cast<std::size_t>(count), [&](std::size_t pi) {
      const auto i = static_cast<Eigen::Index>(pi);
      thread_local Eigen::MatrixXd G;
      G.resize(d, m);
      sys.fields(x.col(i), G);
      x.col(i).noalias() += dt * (G * u.col(i));
    });
    if (!x.allFinite()) throw NumericalError("rollout: non-finite state at step " + std::to_string(n + 1), n + 1);
    if (opts.keep_controls) rev.controls.push_back(u);
    record(n + 1);
  }
  return rev;
}

namespace {

const Ensemble& matching_forward(const ReverseTrace& rev, const ForwardTrace& fwd, std::size_t i) {
  const double T = rev.grid.horizon;
  if (std::abs(fwd.grid.horizon - T) > 1e-9 * std::max(1.0, T)) {
    throw std::invalid_argument("cost: forward and reverse horizons differ");
  }
  try {
    return fwd.at(T - rev.grid.times[i]);
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("cost: forward trace lacks the instant T - t_i for t_i=" +
                                std::to_string(rev.grid.times[i]));
  }
}

}  // namespace

std::vector<double> cost_terms(const ReverseTrace& rev, const ForwardTrace& fwd, const KernelConfig& kernel) {
  std::vector<double> terms;
  terms.reserve(rev.snapshots.size());
  for (std::size_t i = 0; i < rev.snapshots.size(); ++i)
    terms.push_back(kl_blob(rev.snapshots[i], matching_forward(rev, fwd, i), kernel).value);
  return terms;
}

double cost(const ReverseTrace& rev, const ForwardTrace& fwd, const KernelConfig& kernel) {
  const auto terms = cost_terms(rev, fwd, kernel);
  if (terms.empty()) throw std::invalid_argument("cost: no measurement instants");
  double s = 0.0;
  for (double t : terms) s += t;
  return s / static_cast<double>(terms.size());
}

CostGradient cost_and_grad(const ReverseTrace& rev, const ForwardTrace& fwd, const ControlAffineSystem& sys,
                           const MlpPolicy& policy, const KernelConfig& kernel) {
  const std::size_t K = rev.grid.step_count(rev.dt);
  if (rev.steps.size() != K + 1) throw std::invalid_argument("cost_and_grad: rollout must keep every step");
  const std::size_t N = rev.snapshots.size();
  if (N == 0) throw std::invalid_argument("cost_and_grad: no measurement instants");
  const double T = rev.grid.horizon;
  const double dt = rev.dt;
  const Eigen::Index d = sys.state_dim;
  const Eigen::Index m = sys.input_dim;
  const Eigen::Index count = rev.steps.front().cols();

  CostGradient out;
  out.grad = Eigen::VectorXd::Zero(policy.params().size());
  out.terms.resize(N);
  std::vector<Eigen::MatrixXd> snap_grads(N);
  for (std::size_t i = 0; i < N; ++i) {
    auto rep = kl_blob(rev.snapshots[i], matching_forward(rev, fwd, i), kernel, /*with_grad=*/true);
    out.terms[i] = rep.value;
    snap_grads[i] = std::move(*rep.grad) / static_cast<double>(N);
  }
  for (double t : out.terms) out.cost += t;
  out.cost /= static_cast<double>(N);

  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(d, count);
  Eigen::MatrixXd ubar(m, count);
  std::size_t snap = N;  // snapshots are visited from the last one backwards
  PolicyTape tape;
  for (std::size_t n = K; n >= 1; --n) {
    while (snap > 0 && rev.snapshot_steps[snap - 1] == n) {
      lambda += snap_grads[snap - 1];
      --snap;
    }
    const Eigen::MatrixXd& x = rev.steps[n - 1];
    const double tau = static_cast<double>(n - 1) * dt / T;
    const Eigen::MatrixXd u = policy_forward(policy, tau, x, &tape);

    parallel_for(0, static_cast<std::size_t>(count), [&](std::size_t pi) {
      const auto i = static_cast<Eigen::Index>(pi);
      thread_local Eigen::MatrixXd G, J;
      G.resize(d, m);
      J.resize(d, d * m);
      sys.fields(x.col(i), G);
      sys.jacobians(x.col(i), J);
      const Eigen::VectorXd li = lambda.col(i);
      ubar.col(i).noalias() = dt * (G.transpose() * li);
      for (Eigen::Index k = 0; k < m; ++k)
        lambda.col(i).noalias() += (dt * u(k, i)) * (J.block(0, k * d, d, d).transpose() * li);
    });
    lambda += policy_backward(policy, tape, ubar, out.grad);
  }
  return out;
}

Eigen::VectorXd cost_grad(const ReverseTrace& rev, const ForwardTrace& fwd, const ControlAffineSystem& sys,
                          const MlpPolicy& policy, const KernelConfig& kernel) {
  return cost_and_grad(rev, fwd, sys, policy, kernel).grad;
}

Ensemble InitialDistribution::sample(Eigen::Index count, std::uint64_t seed) const {
  if (const auto* box = std::get_if<BoxDomain>(&law)) return sample_uniform(*box, count, seed);
  return sample_gaussian(std::get<GaussianSpec>(law), count, seed);
}

Eigen::Index InitialDistribution::dim() const {
  if (const auto* box = std::get_if<BoxDomain>(&law)) return box->dim();
  return std::get<GaussianSpec>(law).mean.size();
}

Ensemble evaluate_rollout(const MlpPolicy& policy, const ControlAffineSystem& sys,
                          const InitialDistribution& p_initial, const EvalConfig& cfg) {
  const Ensemble init = p_initial.sample(cfg.particles, cfg.seed);
  TimeGrid final_only;
  final_only.horizon = cfg.horizon;
  final_only.times = {cfg.horizon};
  auto rev = rollout(init, sys, policy, cfg.dt, final_only, RolloutOptions{false, false});
  return rev.snapshots.back();
}

double evaluate(const MlpPolicy& policy, const ControlAffineSystem& sys, const Ensemble& target,
                const InitialDistribution& p_initial, const EvalConfig& cfg) {
  return kl_blob(evaluate_rollout(policy, sys, p_initial, cfg), target, cfg.kernel).value;
}

}  // namespace ddpmctl
