#include <cmath>

#include "ddpmctl/error.hpp"
#include "ddpmctl/policy.hpp"

namespace ddpmctl {

AdamState AdamState::for_params(Eigen::Index n, double lr, double beta1, double beta2, double eps) {
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  return s;
}

AdamUpdate adam_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grad, const AdamState& state) {
  if (grad.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!grad.allFinite()) throw NumericalError("adam_step: non-finite gradient", state.step);

  AdamUpdate out{params, state};
  AdamState& s = out.state;
  s.step += 1;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  out.params.array() -= s.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
  return out;
}

}  // namespace ddpmctl
