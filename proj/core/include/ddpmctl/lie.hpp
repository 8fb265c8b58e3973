#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "ddpmctl/systems.hpp"

namespace ddpmctl {

/// A smooth vector field with its Jacobian (d x d, row = component).
struct VectorField {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> value;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

/// The i-th control field of a system, with its analytic Jacobian.
VectorField control_field(const ControlAffineSystem& sys, Eigen::Index i);

/// [f, g]^i = sum_j f^j d_j g^i - g^j d_j f^i.
Eigen::VectorXd lie_bracket(const VectorField& f, const VectorField& g, const Eigen::VectorXd& x);

/// [f, g] as a field. Its Jacobian is taken by central differences with step
/// 1e-5 * (1 + |x|).
VectorField bracket_field(VectorField f, VectorField g);

/// Numerical rank of span{V^0, ..., V^depth} at x, where V^0 are the control
/// fields and V^k = {[g, h] : g in V^0, h in V^(k-1)}. A singular value counts
/// when it exceeds 1e-8 times the largest one.
int chow_rashevsky_rank(const ControlAffineSystem& sys, const Eigen::VectorXd& x, int depth);

}  // namespace ddpmctl
