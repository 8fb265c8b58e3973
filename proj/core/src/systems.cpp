#include "ddpmctl/systems.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace ddpmctl {

Eigen::MatrixXd ControlAffineSystem::g(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::MatrixXd out(state_dim, input_dim);
  fields(x, out);
  return out;
}

Eigen::MatrixXd ControlAffineSystem::jac(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::MatrixXd out(state_dim, state_dim * input_dim);
  jacobians(x, out);
  return out;
}

ControlAffineSystem single_integrator(Eigen::Index d) {
  if (d < 1) throw std::invalid_argument("single_integrator: dimension must be >= 1");
  ControlAffineSystem s;
  s.name = "single_integrator_" + std::to_string(d);
  s.state_dim = d;
  s.input_dim = d;
  s.fields = [](const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Ref<Eigen::MatrixXd> G) { G.setIdentity(); };
  s.jacobians = [](const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Ref<Eigen::MatrixXd> J) { J.setZero(); };
  return s;
}

// x1' = u1, x2' = u2, x3' = x2 u1, x4' = x3 u1, x5' = x4 u1
ControlAffineSystem chained_5d() {
  ControlAffineSystem s;
  s.name = "chained_5d";
  s.state_dim = 5;
  s.input_dim = 2;
  s.fields = [](const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::MatrixXd> G) {
    G.setZero();
    G(0, 0) = 1.0;
    G(2, 0) = x[1];
    G(3, 0) = x[2];
    G(4, 0) = x[3];
    G(1, 1) = 1.0;
  };
  s.jacobians = [](const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Ref<Eigen::MatrixXd> J) {
    J.setZero();
    J(2, 1) = 1.0;
    J(3, 2) = 1.0;
    J(4, 3) = 1.0;
  };
  return s;
}

// x1' = u1 cos x3, x2' = u1 sin x3, x3' = u2
ControlAffineSystem unicycle() {
  ControlAffineSystem s;
  s.name = "unicycle";
  s.state_dim = 3;
  s.input_dim = 2;
  s.fields = [](const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::MatrixXd> G) {
    G.setZero();
    G(0, 0) = std::cos(x[2]);
    G(1, 0) = std::sin(x[2]);
    G(2, 1) = 1.0;
  };
  s.jacobians = [](const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::MatrixXd> J) {
    J.setZero();
    J(0, 2) = -std::sin(x[2]);
    J(1, 2) = std::cos(x[2]);
  };
  return s;
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::function<ControlAffineSystem()>>& registry() {
  static std::map<std::string, std::function<ControlAffineSystem()>> r{
      {"chained_5d", chained_5d},
      {"unicycle", unicycle},
  };
  return r;
}

}  // namespace

void register_system(const std::string& name, std::function<ControlAffineSystem()> factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

std::vector<std::string> registered_systems() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> names{"single_integrator_<d>"};
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

ControlAffineSystem make_system(const std::string& name) {
  {
    std::lock_guard lock(registry_mutex());
    if (auto it = registry().find(name); it != registry().end()) return it->second();
  }
  const std::string prefix = "single_integrator_";
  if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size()) {
    const std::string digits = name.substr(prefix.size());
    if (digits.find_first_not_of("0123456789") == std::string::npos) {
      return single_integrator(std::stol(digits));
    }
  }
  throw std::invalid_argument("unknown system '" + name + "'");
}

Eigen::VectorXd drift_eval(const ControlAffineSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (x.size() != sys.state_dim || u.size() != sys.input_dim) {
    throw std::invalid_argument("drift_eval: dimension mismatch for system " + sys.name);
  }
  return sys.g(x) * u;
}

double jacobian_check(const ControlAffineSystem& sys, const Eigen::Ref<const Eigen::MatrixXd>& points,
                      double step) {
  const Eigen::Index d = sys.state_dim;
  double worst = 0.0;
  for (Eigen::Index p = 0; p < points.cols(); ++p) {
    const Eigen::VectorXd x = points.col(p);
    const Eigen::MatrixXd J = sys.jac(x);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double h = step * (1.0 + std::abs(x[k]));
      Eigen::VectorXd xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const Eigen::MatrixXd dG = (sys.g(xp) - sys.g(xm)) / (2.0 * h);
      for (Eigen::Index i = 0; i < sys.input_dim; ++i) {
        const Eigen::VectorXd analytic = J.block(0, i * d, d, d).col(k);
        const double scale = std::max(1.0, analytic.norm());
        worst = std::max(worst, (analytic - dG.col(i)).norm() / scale);
      }
    }
  }
  return worst;
}

}  // namespace ddpmctl
