#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ddpmctl {

/// Feedforward feedback law u = pi(tau, x) with tau = t / T in [0, 1].
///
/// Input is the concatenation (tau, x) of size d + 1. Hidden layers use tanh,
/// the output layer is affine. Parameters are stored flat, layer by layer:
/// the weight matrix (n_out x n_in, column-major) followed by the bias.
class MlpPolicy {
 public:
  MlpPolicy() = default;
  /// Zero-initialized parameters. layer_sizes = {d + 1, hidden..., m}.
  explicit MlpPolicy(std::vector<int> layer_sizes);

  /// Glorot-uniform weights, zero biases.
  static MlpPolicy glorot(std::vector<int> layer_sizes, std::uint64_t seed);
  /// Builds {state_dim + 1, hidden..., input_dim}.
  static std::vector<int> architecture(Eigen::Index state_dim, const std::vector<int>& hidden, Eigen::Index input_dim);
  static std::size_t parameter_count(const std::vector<int>& layer_sizes);

  [[nodiscard]] const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  [[nodiscard]] Eigen::Index state_dim() const noexcept { return sizes_.front() - 1; }
  [[nodiscard]] Eigen::Index output_dim() const noexcept { return sizes_.back(); }
  [[nodiscard]] std::size_t layer_count() const noexcept { return sizes_.size() - 1; }

  [[nodiscard]] const Eigen::VectorXd& params() const noexcept { return params_; }
  void set_params(const Eigen::VectorXd& p);

  [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  [[nodiscard]] Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
  [[nodiscard]] Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
  [[nodiscard]] std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
};

/// Activations of a batched forward pass, kept for the backward pass.
struct PolicyTape {
  std::vector<Eigen::MatrixXd> activations;  // layer inputs; front is (tau, x)
  Eigen::MatrixXd output;
};

/// Batched forward pass; columns of `states` are particles sharing one tau.
Eigen::MatrixXd policy_forward(const MlpPolicy& p, double tau, const Eigen::Ref<const Eigen::MatrixXd>& states,
                               PolicyTape* tape = nullptr);

/// Batched vector-Jacobian product. Returns cotangent^T du/dx per column and
/// adds cotangent^T du/dtheta (summed over the batch) into grad_params.
Eigen::MatrixXd policy_backward(const MlpPolicy& p, const PolicyTape& tape,
                                const Eigen::Ref<const Eigen::MatrixXd>& cotangent, Eigen::Ref<Eigen::VectorXd> grad_params);

Eigen::VectorXd policy_eval(const MlpPolicy& p, double tau, const Eigen::Ref<const Eigen::VectorXd>& x);

struct PolicyVjp {
  Eigen::VectorXd grad_x;
  Eigen::VectorXd grad_params;
};
PolicyVjp policy_vjp(const MlpPolicy& p, double tau, const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& cotangent);

/// Adam with bias correction.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  static AdamState for_params(Eigen::Index n, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                              double eps = 1e-8);
};

struct AdamUpdate {
  Eigen::VectorXd params;
  AdamState state;
};

/// Pure: returns the updated parameters and state. Throws NumericalError on a
/// non-finite gradient.
AdamUpdate adam_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grad, const AdamState& state);

}  // namespace ddpmctl
