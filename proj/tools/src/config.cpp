#include "ddpmctl/app/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "ddpmctl/app/io.hpp"
#include "ddpmctl/pde/heat.hpp"
#include "ddpmctl/random.hpp"

namespace ddpmctl::app {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
  }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

Eigen::VectorXd get_vector(const json& obj, const char* key, const std::string& where) {
  const auto v = get<std::vector<double>>(obj, key, where);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string read_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  return read_text(path);
}

}  // namespace

double RunConfig::kernel_bandwidth() const { return bandwidth ? *bandwidth : 0.2 * domain.mean_half_width(); }

ForwardConfig RunConfig::forward_config() const {
  ForwardConfig f;
  f.drift = drift;
  f.sigma = sigma;
  f.dt = dt;
  f.domain = domain;
  f.seed = noise_seed();
  return f;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.dt = dt;
  t.particles = train_size;
  t.kernel = kernel();
  t.optimizer = optimizer;
  t.seed = train_seed();
  return t;
}

EvalConfig RunConfig::eval_config() const {
  EvalConfig e;
  e.particles = static_cast<Eigen::Index>(eval_size);
  e.dt = dt;
  e.horizon = horizon;
  e.kernel = kernel();
  e.seed = eval_seed;
  return e;
}

std::vector<int> RunConfig::layer_sizes() const {
  const auto sys = make_system(system);
  return MlpPolicy::architecture(sys.state_dim, hidden, sys.input_dim);
}

std::uint64_t RunConfig::target_seed() const { return derive_seed(seed, 1); }
std::uint64_t RunConfig::noise_seed() const { return derive_seed(seed, 2); }
std::uint64_t RunConfig::init_seed() const { return derive_seed(seed, 3); }
std::uint64_t RunConfig::train_seed() const { return derive_seed(seed, 4); }

void RunConfig::validate() const {
  ControlAffineSystem sys;
  try {
    sys = make_system(system);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto d = sys.state_dim;
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  if (domain.dim() != d) fail("domain dimension does not match system " + system);
  try {
    domain.validate();
    target.validate();
    drift.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (target.mean.size() != d) fail("target mean dimension does not match system " + system);
  if (initial.dim() != d) fail("initial distribution dimension does not match system " + system);
  if (std::holds_alternative<BoxDomain>(initial.law) && !std::get<BoxDomain>(initial.law).all_bounded()) {
    fail("uniform initial distribution needs a bounded domain");
  }
  if (const auto* g = std::get_if<GaussianSpec>(&initial.law)) {
    try {
      g->validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail("sigma must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) fail("horizon must be positive");
  if (!(dt > 0.0) || dt > horizon) fail("dt must be in (0, horizon]");
  if (measurements < 2) fail("measurements must be at least 2");
  try {
    (void)time_grid().step_indices(dt);
  } catch (const std::invalid_argument& e) {
    fail(std::string("dt must divide the spacing of the measurement instants: ") + e.what());
  }
  if (train_size < 1) fail("train_size must be at least 1");
  if (!(kernel_bandwidth() > 0.0)) fail("bandwidth must be positive");
  for (int h : hidden) {
    if (h < 1) fail("hidden layer sizes must be positive");
  }
  if (!(optimizer.lr > 0.0)) fail("optimizer.lr must be positive");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) || !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    fail("optimizer betas must lie in [0, 1)");
  }
  if (!(optimizer.eps > 0.0)) fail("optimizer.eps must be positive");
  if (epochs < 1) fail("epochs must be at least 1");
  if (eval_size < 1) fail("eval_size must be at least 1");
  const auto bytes = rollout_memory_bytes(static_cast<Eigen::Index>(train_size), d, time_grid().step_count(dt));
  if (bytes > (std::size_t{4} << 30)) fail("rollout storage of " + std::to_string(bytes >> 20) + " MiB exceeds 4 GiB");
}

RunConfig parse_run_config(const std::string& text) {
  const json j = parse_json(text);
  const std::string w = "config";
  check_keys(j, w,
             {"experiment", "system", "domain", "target", "initial", "drift", "sigma", "horizon", "dt", "measurements",
              "train_size", "bandwidth", "hidden", "optimizer", "epochs", "eval_size", "kl_threshold", "seed",
              "eval_seed", "save_snapshots"});
  RunConfig c;
  c.experiment = get_or<std::string>(j, "experiment", c.experiment, w);
  c.system = get<std::string>(j, "system", w);
  Eigen::Index d = 0;
  try {
    d = make_system(c.system).state_dim;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  c.domain = BoxDomain::unbounded(d);
  if (j.contains("domain")) {
    const json& dom = j.at("domain");
    const std::string wd = w + ".domain";
    check_keys(dom, wd, {"kind", "lower", "upper"});
    const auto kind = get<std::string>(dom, "kind", wd);
    if (kind == "box") {
      c.domain.lower = get_vector(dom, "lower", wd);
      c.domain.upper = get_vector(dom, "upper", wd);
      c.domain.bounded.assign(static_cast<std::size_t>(c.domain.lower.size()), true);
    } else if (kind != "unbounded") {
      throw ConfigError(wd + ".kind must be \"box\" or \"unbounded\"");
    }
  }

  {
    const std::string wt = w + ".target";
    if (!j.contains("target")) throw ConfigError(wt + " is required");
    const json& t = j.at("target");
    check_keys(t, wt, {"mean", "cov_scale"});
    c.target.mean = get_vector(t, "mean", wt);
    c.target.cov_scale = get<double>(t, "cov_scale", wt);
  }

  c.initial.law = c.domain;
  if (j.contains("initial")) {
    const json& in = j.at("initial");
    const std::string wi = w + ".initial";
    check_keys(in, wi, {"kind", "mean", "cov_scale"});
    const auto kind = get<std::string>(in, "kind", wi);
    if (kind == "gaussian") {
      c.initial.law = GaussianSpec{get_vector(in, "mean", wi), get<double>(in, "cov_scale", wi)};
    } else if (kind != "uniform") {
      throw ConfigError(wi + ".kind must be \"uniform\" or \"gaussian\"");
    } else if (in.contains("mean") || in.contains("cov_scale")) {
      throw ConfigError(wi + ": uniform takes no mean/cov_scale");
    }
  }

  if (j.contains("drift")) {
    const json& dr = j.at("drift");
    const std::string wd = w + ".drift";
    check_keys(dr, wd, {"kind", "k"});
    const auto kind = get<std::string>(dr, "kind", wd);
    if (kind == "linear") c.drift = DriftSpec::linear(get_or<double>(dr, "k", 1.0, wd));
    else if (kind == "zero") c.drift = DriftSpec::zero();
    else throw ConfigError(wd + ".kind must be \"zero\" or \"linear\"");
  }

  c.sigma = get_or<double>(j, "sigma", c.sigma, w);
  c.horizon = get_or<double>(j, "horizon", c.horizon, w);
  c.dt = get_or<double>(j, "dt", c.dt, w);
  c.measurements = get_or<std::size_t>(j, "measurements", c.measurements, w);
  c.train_size = get_or<std::size_t>(j, "train_size", c.train_size, w);
  if (j.contains("bandwidth") && !j.at("bandwidth").is_null()) c.bandwidth = get<double>(j, "bandwidth", w);
  c.hidden = get_or<std::vector<int>>(j, "hidden", c.hidden, w);
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    const std::string wo = w + ".optimizer";
    check_keys(o, wo, {"lr", "beta1", "beta2", "eps"});
    c.optimizer.lr = get_or<double>(o, "lr", c.optimizer.lr, wo);
    c.optimizer.beta1 = get_or<double>(o, "beta1", c.optimizer.beta1, wo);
    c.optimizer.beta2 = get_or<double>(o, "beta2", c.optimizer.beta2, wo);
    c.optimizer.eps = get_or<double>(o, "eps", c.optimizer.eps, wo);
  }
  c.epochs = get_or<std::size_t>(j, "epochs", c.epochs, w);
  c.eval_size = get_or<std::size_t>(j, "eval_size", c.eval_size, w);
  if (j.contains("kl_threshold") && !j.at("kl_threshold").is_null()) c.kl_threshold = get<double>(j, "kl_threshold", w);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, w);
  c.eval_seed = get_or<std::uint64_t>(j, "eval_seed", c.eval_seed, w);
  c.save_snapshots = get_or<bool>(j, "save_snapshots", c.save_snapshots, w);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_config(path)); }

std::string to_json(const RunConfig& c) {
  ordered_json j;
  j["experiment"] = c.experiment;
  j["system"] = c.system;
  if (c.domain.any_bounded()) {
    j["domain"] = {{"kind", "box"}, {"lower", to_std(c.domain.lower)}, {"upper", to_std(c.domain.upper)}};
  } else {
    j["domain"] = {{"kind", "unbounded"}};
  }
  j["target"] = {{"mean", to_std(c.target.mean)}, {"cov_scale", c.target.cov_scale}};
  if (const auto* g = std::get_if<GaussianSpec>(&c.initial.law)) {
    j["initial"] = {{"kind", "gaussian"}, {"mean", to_std(g->mean)}, {"cov_scale", g->cov_scale}};
  } else {
    j["initial"] = {{"kind", "uniform"}};
  }
  if (c.drift.kind == DriftSpec::Kind::linear) j["drift"] = {{"kind", "linear"}, {"k", c.drift.k}};
  else j["drift"] = {{"kind", "zero"}};
  j["sigma"] = c.sigma;
  j["horizon"] = c.horizon;
  j["dt"] = c.dt;
  j["measurements"] = c.measurements;
  j["train_size"] = c.train_size;
  j["bandwidth"] = c.kernel_bandwidth();
  j["hidden"] = c.hidden;
  j["optimizer"] = {{"lr", c.optimizer.lr}, {"beta1", c.optimizer.beta1}, {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps}};
  j["epochs"] = c.epochs;
  j["eval_size"] = c.eval_size;
  j["kl_threshold"] = c.kl_threshold ? ordered_json(*c.kl_threshold) : ordered_json(nullptr);
  j["seed"] = c.seed;
  j["eval_seed"] = c.eval_seed;
  j["save_snapshots"] = c.save_snapshots;
  return j.dump(2) + "\n";
}

double PdeConfig::coarse_dt() const {
  if (dt) return *dt;
  const double limit = dt_safety * pde::heat_stable_dt(grid);
  const double steps = std::ceil(horizon / limit - 1e-9);
  return horizon / steps;
}

void PdeConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("pde config: " + msg); };
  ControlAffineSystem sys;
  try {
    sys = make_system(system);
    grid.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (sys.state_dim != grid.dims()) fail("system dimension does not match the grid");
  if (grid.dims() < 2 || grid.dims() > 3) fail("grids must be 2-D or 3-D");
  if (!refined_cells.empty() && refined_cells.size() != grid.cells.size()) fail("refined resolution has wrong rank");
  if (!(horizon > 0.0)) fail("horizon must be positive");
  if (!(dt_safety > 0.0 && dt_safety <= 1.0)) fail("dt_safety must lie in (0, 1]");
  if (!(refine_dt_factor >= 1.0)) fail("refine_dt_factor must be >= 1");
  const double step = coarse_dt();
  const double limit = pde::heat_stable_dt(grid);
  if (!(step > 0.0) || step > limit * (1.0 + 1e-12)) {
    fail("dt=" + format_double(step) + " violates the stability bound " + format_double(limit));
  }
  const double ratio = horizon / step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) fail("dt must divide the horizon");
  if (!refined_cells.empty()) {
    pde::GridSpec fine = grid;
    fine.cells = refined_cells;
    try {
      fine.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    if (step / refine_dt_factor > pde::heat_stable_dt(fine) * (1.0 + 1e-12)) fail("refined dt violates the stability bound");
  }
  for (const auto& m : modes) {
    if (static_cast<int>(m.wavenumbers.size()) != grid.dims()) fail("mode wavenumbers must match the grid rank");
  }
  if (!(poisson.rel_tol > 0.0) || poisson.max_iterations < 1) fail("invalid poisson options");
}

PdeConfig parse_pde_config(const std::string& text) {
  const json j = parse_json(text);
  const std::string w = "pde config";
  check_keys(j, w,
             {"name", "system", "cells", "refined_cells", "lower", "upper", "boundary", "horizon", "dt", "dt_safety",
              "refine_dt_factor", "target", "poisson", "spectral_gap", "check_phi", "thresholds", "seed"});
  PdeConfig c;
  c.name = get_or<std::string>(j, "name", c.name, w);
  c.system = get<std::string>(j, "system", w);
  c.grid.cells = get<std::vector<int>>(j, "cells", w);
  c.grid.lower = get<std::vector<double>>(j, "lower", w);
  c.grid.upper = get<std::vector<double>>(j, "upper", w);
  for (const auto& b : get<std::vector<std::string>>(j, "boundary", w)) {
    if (b == "zero_flux") c.grid.boundary.push_back(pde::Boundary::zero_flux);
    else if (b == "periodic") c.grid.boundary.push_back(pde::Boundary::periodic);
    else throw ConfigError(w + ".boundary entries must be \"zero_flux\" or \"periodic\"");
  }
  c.refined_cells = get_or<std::vector<int>>(j, "refined_cells", {}, w);
  c.horizon = get_or<double>(j, "horizon", c.horizon, w);
  if (j.contains("dt") && !j.at("dt").is_null()) c.dt = get<double>(j, "dt", w);
  c.dt_safety = get_or<double>(j, "dt_safety", c.dt_safety, w);
  c.refine_dt_factor = get_or<double>(j, "refine_dt_factor", c.refine_dt_factor, w);
  if (j.contains("target")) {
    const json& t = j.at("target");
    const std::string wt = w + ".target";
    check_keys(t, wt, {"floor", "modes"});
    c.floor = get_or<double>(t, "floor", c.floor, wt);
    if (t.contains("modes")) {
      for (const auto& m : t.at("modes")) {
        check_keys(m, wt + ".modes", {"amplitude", "wavenumbers"});
        c.modes.push_back({get<double>(m, "amplitude", wt), get<std::vector<int>>(m, "wavenumbers", wt)});
      }
    }
  }
  if (j.contains("poisson")) {
    const json& p = j.at("poisson");
    check_keys(p, w + ".poisson", {"rel_tol", "max_iterations"});
    c.poisson.rel_tol = get_or<double>(p, "rel_tol", c.poisson.rel_tol, w);
    c.poisson.max_iterations = get_or<std::size_t>(p, "max_iterations", c.poisson.max_iterations, w);
  }
  c.spectral_gap = get_or<bool>(j, "spectral_gap", c.spectral_gap, w);
  c.check_phi = get_or<bool>(j, "check_phi", c.check_phi, w);
  if (j.contains("thresholds")) {
    const json& t = j.at("thresholds");
    const std::string wt = w + ".thresholds";
    check_keys(t, wt, {"max_error", "min_improvement", "phi_offset", "poisson_residual", "constant_defect"});
    auto& th = c.thresholds;
    th.max_error = get_or<double>(t, "max_error", th.max_error, wt);
    th.min_improvement = get_or<double>(t, "min_improvement", th.min_improvement, wt);
    th.phi_offset = get_or<double>(t, "phi_offset", th.phi_offset, wt);
    th.poisson_residual = get_or<double>(t, "poisson_residual", th.poisson_residual, wt);
    th.constant_defect = get_or<double>(t, "constant_defect", th.constant_defect, wt);
  }
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, w);
  c.validate();
  return c;
}

PdeConfig load_pde_config(const std::filesystem::path& path) { return parse_pde_config(read_config(path)); }

}  // namespace ddpmctl::app
