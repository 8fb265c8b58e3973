#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace ddpmctl {

/// Driftless control-affine dynamics xdot = sum_i g_i(x) u_i.
///
/// `fields(x, G)` writes the d x m matrix whose columns are g_i(x).
/// `jacobians(x, J)` writes the d x (d*m) matrix whose i-th d x d block is
/// dg_i/dx (row = component of g_i, column = derivative direction).
struct ControlAffineSystem {
  using FieldsFn = std::function<void(const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Ref<Eigen::MatrixXd>)>;
  using JacobiansFn = std::function<void(const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Ref<Eigen::MatrixXd>)>;

  std::string name;
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  FieldsFn fields;
  JacobiansFn jacobians;

  [[nodiscard]] Eigen::MatrixXd g(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  [[nodiscard]] Eigen::MatrixXd jac(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

ControlAffineSystem single_integrator(Eigen::Index d);
ControlAffineSystem chained_5d();
ControlAffineSystem unicycle();

/// Looks up a system by name: "single_integrator_<d>", "chained_5d",
/// "unicycle", or anything added with register_system. Throws
/// std::invalid_argument for unknown names.
ControlAffineSystem make_system(const std::string& name);
void register_system(const std::string& name, std::function<ControlAffineSystem()> factory);
std::vector<std::string> registered_systems();

/// sum_i g_i(x) u_i.
Eigen::VectorXd drift_eval(const ControlAffineSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& u);

/// Largest relative discrepancy between the analytic Jacobians and central
/// finite differences of the fields over the given points (columns).
double jacobian_check(const ControlAffineSystem& sys, const Eigen::Ref<const Eigen::MatrixXd>& points,
                      double step = 1e-6);

}  // namespace ddpmctl
