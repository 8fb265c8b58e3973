#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ddpmctl/error.hpp"
#include "ddpmctl/random.hpp"
#include "ddpmctl/reverse.hpp"

namespace ddpmctl {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("train: dt must be positive");
  if (particles < 1) throw std::invalid_argument("train: need at least one particle");
  if (!(optimizer.lr > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  if (first_epoch > epochs) throw std::invalid_argument("train: resume epoch beyond the configured epochs");
  kernel.validate();
}

std::uint64_t epoch_seed(std::uint64_t master, std::size_t epoch) {
  return derive_seed(master, epoch, 0x65706f6368ULL);
}

TrainResult train(const TrainConfig& cfg, const ControlAffineSystem& sys, const ForwardTrace& fwd,
                  const MlpPolicy& initial_policy, const InitialDistribution& p_initial, const EpochCallback& on_epoch) {
  cfg.validate();
  if (p_initial.dim() != sys.state_dim) throw std::invalid_argument("train: initial distribution dimension mismatch");

  TrainResult result{initial_policy, cfg.optimizer, {}};
  const auto n_params = initial_policy.params().size();
  if (result.optimizer.m.size() != n_params || result.optimizer.v.size() != n_params) {
    if (cfg.first_epoch > 0) throw std::invalid_argument("train: resuming needs optimizer moments");
    result.optimizer = AdamState::for_params(n_params, cfg.optimizer.lr, cfg.optimizer.beta1, cfg.optimizer.beta2,
                                             cfg.optimizer.eps);
  }

  using clock = std::chrono::steady_clock;
  for (std::size_t e = cfg.first_epoch; e < cfg.epochs; ++e) {
    const auto start = clock::now();
    const Ensemble init = p_initial.sample(static_cast<Eigen::Index>(cfg.particles), epoch_seed(cfg.seed, e));
    const ReverseTrace rev = rollout(init, sys, result.policy, cfg.dt, fwd.grid);
    const CostGradient cg = cost_and_grad(rev, fwd, sys, result.policy, cfg.kernel);
    if (!std::isfinite(cg.cost)) throw NumericalError("train: non-finite cost at epoch " + std::to_string(e), e);

    EpochRecord rec;
    rec.epoch = e;
    rec.cost = cg.cost;
    rec.final_kl = cg.terms.back();
    if (on_epoch) on_epoch(rec, result.policy);

    auto upd = adam_step(result.policy.params(), cg.grad, result.optimizer);
    result.policy.set_params(upd.params);
    result.optimizer = std::move(upd.state);
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.history.epochs.push_back(rec);
  }
  return result;
}

}  // namespace ddpmctl
