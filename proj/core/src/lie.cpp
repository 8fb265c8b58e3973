#include "ddpmctl/lie.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace ddpmctl {

VectorField control_field(const ControlAffineSystem& sys, Eigen::Index i) {
  if (i < 0 || i >= sys.input_dim) throw std::out_of_range("control_field: index out of range");
  const Eigen::Index d = sys.state_dim;
  return VectorField{
      [sys, i](const Eigen::VectorXd& x) -> Eigen::VectorXd { return sys.g(x).col(i); },
      [sys, i, d](const Eigen::VectorXd& x) -> Eigen::MatrixXd { return sys.jac(x).block(0, i * d, d, d); },
  };
}

Eigen::VectorXd lie_bracket(const VectorField& f, const VectorField& g, const Eigen::VectorXd& x) {
  const Eigen::VectorXd fx = f.value(x);
  const Eigen::VectorXd gx = g.value(x);
  if (fx.size() != x.size() || gx.size() != x.size()) {
    throw std::invalid_argument("lie_bracket: field dimension does not match the point");
  }
  return g.jacobian(x) * fx - f.jacobian(x) * gx;
}

VectorField bracket_field(VectorField f, VectorField g) {
  auto value = [f, g](const Eigen::VectorXd& x) -> Eigen::VectorXd { return lie_bracket(f, g, x); };
  auto jacobian = [value](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    const double h = 1e-5 * (1.0 + x.norm());
    Eigen::MatrixXd J(x.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      J.col(k) = (value(xp) - value(xm)) / (2.0 * h);
    }
    return J;
  };
  return VectorField{value, jacobian};
}

int chow_rashevsky_rank(const ControlAffineSystem& sys, const Eigen::VectorXd& x, int depth) {
  if (depth < 0) throw std::invalid_argument("chow_rashevsky_rank: depth must be >= 0");
  if (x.size() != sys.state_dim) throw std::invalid_argument("chow_rashevsky_rank: point dimension mismatch");

  std::vector<VectorField> base;
  for (Eigen::Index i = 0; i < sys.input_dim; ++i) base.push_back(control_field(sys, i));

  std::vector<Eigen::VectorXd> columns;
  for (const auto& f : base) columns.push_back(f.value(x));

  auto rank_of = [&]() {
    Eigen::MatrixXd span(x.size(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) span.col(static_cast<Eigen::Index>(c)) = columns[c];
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(span).singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    int r = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv[k] > 1e-8 * sv[0]) ++r;
    return r;
  };

  int rank = rank_of();
  std::vector<VectorField> level = base;
  for (int k = 1; k <= depth && rank < x.size(); ++k) {
    std::vector<VectorField> next;
    for (const auto& g : base) {
      for (const auto& h : level) {
        next.push_back(bracket_field(g, h));
        columns.push_back(next.back().value(x));
      }
    }
    level = std::move(next);
    rank = rank_of();
  }
  return rank;
}

}  // namespace ddpmctl
