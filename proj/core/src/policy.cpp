#include "ddpmctl/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "ddpmctl/random.hpp"

namespace ddpmctl {

MlpPolicy::MlpPolicy(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("MlpPolicy: need input and output sizes");
  for (int s : sizes_)
    if (s < 1) throw std::invalid_argument("MlpPolicy: layer sizes must be positive");
  if (sizes_.front() < 2) throw std::invalid_argument("MlpPolicy: input must hold time plus at least one state");
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(sizes_[l] + 1) * static_cast<std::size_t>(sizes_[l + 1]);
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
}

std::size_t MlpPolicy::parameter_count(const std::vector<int>& layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += static_cast<std::size_t>(layer_sizes[l] + 1) * static_cast<std::size_t>(layer_sizes[l + 1]);
  return n;
}

std::vector<int> MlpPolicy::architecture(Eigen::Index state_dim, const std::vector<int>& hidden, Eigen::Index input_dim) {
  std::vector<int> sizes{static_cast<int>(state_dim + 1)};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(static_cast<int>(input_dim));
  return sizes;
}

MlpPolicy MlpPolicy::glorot(std::vector<int> layer_sizes, std::uint64_t seed) {
  MlpPolicy p(std::move(layer_sizes));
  Xoshiro256 rng(derive_seed(seed, 0x676c6f726f74ULL));
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    const double fan_in = p.sizes_[l];
    const double fan_out = p.sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    auto w = p.weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = limit * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

void MlpPolicy::set_params(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) throw std::invalid_argument("MlpPolicy::set_params: parameter count mismatch");
  params_ = p;
}

Eigen::Map<const Eigen::MatrixXd> MlpPolicy::weight(std::size_t l) const {
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}
Eigen::Map<const Eigen::VectorXd> MlpPolicy::bias(std::size_t l) const {
  return {params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1] * sizes_[l]), sizes_[l + 1]};
}
Eigen::Map<Eigen::MatrixXd> MlpPolicy::weight(std::size_t l) {
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}
Eigen::Map<Eigen::VectorXd> MlpPolicy::bias(std::size_t l) {
  return {params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1] * sizes_[l]), sizes_[l + 1]};
}

Eigen::MatrixXd policy_forward(const MlpPolicy& p, double tau, const Eigen::Ref<const Eigen::MatrixXd>& states,
                               PolicyTape* tape) {
  if (states.rows() != p.state_dim()) throw std::invalid_argument("policy: state dimension mismatch");
  Eigen::MatrixXd a(states.rows() + 1, states.cols());
  a.row(0).setConstant(tau);
  a.bottomRows(states.rows()) = states;
  if (tape) tape->activations.clear();
  const std::size_t L = p.layer_count();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = p.weight(l) * a;
    z.colwise() += p.bias(l);
    if (l + 1 < L) z = z.array().tanh().matrix();
    if (tape) tape->activations.push_back(std::move(a));
    a = std::move(z);
  }
  if (tape) tape->output = a;
  return a;
}

Eigen::MatrixXd policy_backward(const MlpPolicy& p, const PolicyTape& tape,
                                const Eigen::Ref<const Eigen::MatrixXd>& cotangent, Eigen::Ref<Eigen::VectorXd> grad_params) {
  const std::size_t L = p.layer_count();
  if (tape.activations.size() != L) throw std::invalid_argument("policy_backward: tape does not match network");
  if (cotangent.rows() != p.output_dim() || cotangent.cols() != tape.output.cols()) {
    throw std::invalid_argument("policy_backward: cotangent shape mismatch");
  }
  if (grad_params.size() != p.params().size()) throw std::invalid_argument("policy_backward: gradient size mismatch");

  Eigen::MatrixXd delta = cotangent;  // d loss / d z for the current layer
  for (std::size_t l = L; l-- > 0;) {
    const Eigen::MatrixXd& in = tape.activations[l];
    const auto rows = p.layer_sizes()[l + 1];
    const auto cols = p.layer_sizes()[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad_params.data() + p.weight_offset(l), rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(grad_params.data() + p.weight_offset(l) + static_cast<std::size_t>(rows * cols), rows);
    gw.noalias() += delta * in.transpose();
    gb += delta.rowwise().sum();
    Eigen::MatrixXd upstream = p.weight(l).transpose() * delta;
    if (l > 0) {
      // `in` is tanh output of the previous layer.
      delta = upstream.array() * (1.0 - in.array().square());
    } else {
      delta = std::move(upstream);
    }
  }
  return delta.bottomRows(delta.rows() - 1);
}

Eigen::VectorXd policy_eval(const MlpPolicy& p, double tau, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return policy_forward(p, tau, x);
}

PolicyVjp policy_vjp(const MlpPolicy& p, double tau, const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& cotangent) {
  PolicyTape tape;
  policy_forward(p, tau, x, &tape);
  PolicyVjp out;
  out.grad_params = Eigen::VectorXd::Zero(p.params().size());
  out.grad_x = policy_backward(p, tape, cotangent, out.grad_params);
  return out;
}

}  // namespace ddpmctl
