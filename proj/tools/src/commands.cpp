#include "ddpmctl/app/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ddpmctl/divergence.hpp"
#include "ddpmctl/lie.hpp"
#include "ddpmctl/pde/heat.hpp"
#include "ddpmctl/pde/sub_laplacian.hpp"

namespace ddpmctl::app {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string snapshot_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu.csv", prefix, i);
  return buf;
}

std::string join(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

// Rows of a numeric CSV with a header line; missing file gives no rows.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
  std::vector<std::vector<double>> rows;
  if (!std::filesystem::exists(path)) return rows;
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) throw ParseError(path.string() + ": bad number");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

TrainHistory previous_history(const std::filesystem::path& out, std::size_t first_epoch) {
  TrainHistory h;
  const auto costs = read_numeric_csv(out / "history.csv");
  const auto times = read_numeric_csv(out / "timing.csv");
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (costs[i].size() != 3) throw ParseError("history.csv: expected 3 columns");
    const auto epoch = static_cast<std::size_t>(costs[i][0]);
    if (epoch >= first_epoch) break;
    EpochRecord r;
    r.epoch = epoch;
    r.cost = costs[i][1];
    r.final_kl = costs[i][2];
    if (i < times.size() && times[i].size() == 2) r.seconds = times[i][1];
    h.epochs.push_back(r);
  }
  return h;
}

}  // namespace

Ensemble target_samples(const RunConfig& cfg) {
  return sample_gaussian(cfg.target, static_cast<Eigen::Index>(cfg.train_size), cfg.target_seed());
}

ForwardTrace run_forward(const RunConfig& cfg) {
  cfg.validate();
  Ensemble init = target_samples(cfg);
  // Target draws outside a bounded domain are folded in before noising.
  if (cfg.domain.any_bounded()) {
    for (Eigen::Index i = 0; i < init.size(); ++i) reflect_inplace(init.particle(i), cfg.domain);
  }
  return simulate_forward(init, cfg.forward_config(), cfg.time_grid());
}

ForwardSummary cmd_forward(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
  ForwardSummary s;
  s.trace = run_forward(cfg);
  std::filesystem::create_directories(out / "snapshots");
  write_text(out / "config.json", to_json(cfg));

  ordered_json manifest;
  manifest["experiment"] = cfg.experiment;
  manifest["system"] = cfg.system;
  manifest["dim"] = s.trace.snapshots.front().dim();
  manifest["particles"] = s.trace.snapshots.front().size();
  manifest["drift"] = cfg.drift.to_string();
  manifest["sigma"] = cfg.sigma;
  manifest["dt"] = cfg.dt;
  manifest["seed"] = cfg.seed;
  ordered_json snaps = ordered_json::array();
  for (std::size_t i = 0; i < s.trace.snapshots.size(); ++i) {
    const auto name = snapshot_name("forward", i);
    write_ensemble_csv(out / "snapshots" / name, s.trace.snapshots[i]);
    snaps.push_back({{"time", s.trace.snapshots[i].time}, {"file", "snapshots/" + name}});
  }
  manifest["snapshots"] = std::move(snaps);

  const Ensemble& last = s.trace.snapshots.back();
  s.final_variance = last.size() > 1 ? coordinate_variance(last) : Eigen::VectorXd::Zero(last.dim());
  manifest["final_variance"] = std::vector<double>(s.final_variance.data(), s.final_variance.data() + s.final_variance.size());
  log << "forward: " << s.trace.snapshots.size() << " snapshots of " << last.size() << " particles in " << last.dim()
      << "-D\n";
  log << "variance at T=" << format_double(last.time) << ": " << join(s.final_variance) << "\n";

  if (cfg.drift.kind == DriftSpec::Kind::zero && cfg.domain.all_bounded()) {
    // Aim for at least five expected counts per histogram cell.
    const double per_axis = std::pow(static_cast<double>(last.size()) / 5.0, 1.0 / static_cast<double>(last.dim()));
    const int bins = std::clamp(static_cast<int>(per_axis), 2, 10);
    if (std::pow(bins, last.dim()) * 5.0 <= static_cast<double>(last.size())) {
      s.uniformity = chi_square_uniformity(last, cfg.domain, bins);
      manifest["uniformity"] = {{"bins_per_axis", bins},
                                {"statistic", s.uniformity->statistic},
                                {"dof", s.uniformity->dof},
                                {"p_value", s.uniformity->p_value}};
      log << "uniformity chi-square: " << format_double(s.uniformity->statistic) << " (dof " << s.uniformity->dof
          << ", p=" << format_double(s.uniformity->p_value) << ")\n";
    }
  }
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return s;
}

TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log,
                      const std::optional<std::filesystem::path>& resume) {
  cfg.validate();
  const ControlAffineSystem sys = make_system(cfg.system);
  const auto sizes = cfg.layer_sizes();
  TrainConfig tc = cfg.train_config();
  MlpPolicy policy;
  TrainHistory earlier;
  if (resume) {
    Checkpoint ckpt = load_checkpoint(*resume);
    if (ckpt.policy.layer_sizes() != sizes) throw ConfigError("checkpoint architecture does not match the config");
    if (!ckpt.optimizer) throw ConfigError("checkpoint has no optimizer state to resume from");
    if (ckpt.next_epoch > cfg.epochs) throw ConfigError("checkpoint is past the configured number of epochs");
    policy = std::move(ckpt.policy);
    tc.optimizer = std::move(*ckpt.optimizer);
    tc.first_epoch = ckpt.next_epoch;
    earlier = previous_history(out, tc.first_epoch);
  } else {
    policy = MlpPolicy::glorot(sizes, cfg.init_seed());
  }

  const ForwardTrace fwd = run_forward(cfg);
  std::filesystem::create_directories(out);
  write_text(out / "config.json", to_json(cfg));

  const std::size_t every = std::max<std::size_t>(1, cfg.epochs / 10);
  auto progress = [&](const EpochRecord& r, const MlpPolicy&) {
    if (r.epoch % every == 0 || r.epoch + 1 == cfg.epochs) {
      log << "epoch " << r.epoch << "  cost " << format_double(r.cost) << "  final_kl " << format_double(r.final_kl)
          << "\n";
    }
  };
  TrainResult res = train(tc, sys, fwd, policy, cfg.initial, progress);
  earlier.epochs.insert(earlier.epochs.end(), res.history.epochs.begin(), res.history.epochs.end());
  res.history = std::move(earlier);

  save_checkpoint(out / "policy.json", Checkpoint{res.policy, res.optimizer, cfg.epochs});
  write_history_csv(out / "history.csv", res.history);
  write_timing_csv(out / "timing.csv", res.history);
  if (cfg.save_snapshots) {
    std::filesystem::create_directories(out / "snapshots");
    for (std::size_t i = 0; i < fwd.snapshots.size(); ++i) {
      write_ensemble_csv(out / "snapshots" / snapshot_name("forward", i), fwd.snapshots[i]);
    }
    const Ensemble init = cfg.initial.sample(static_cast<Eigen::Index>(cfg.eval_size), cfg.eval_seed);
    const ReverseTrace rev = rollout(init, sys, res.policy, cfg.dt, fwd.grid, {.keep_steps = false});
    for (std::size_t i = 0; i < rev.snapshots.size(); ++i) {
      write_ensemble_csv(out / "snapshots" / snapshot_name("reverse", i), rev.snapshots[i]);
    }
  }
  if (!res.history.epochs.empty()) {
    const auto& last = res.history.epochs.back();
    log << "final cost " << format_double(last.cost) << "  final KL " << format_double(last.final_kl) << "\n";
  }
  return res;
}

EvalMetrics cmd_eval(const RunConfig& cfg, const std::filesystem::path& policy_path, const std::filesystem::path& out,
                     std::ostream& log) {
  cfg.validate();
  const Checkpoint ckpt = load_checkpoint(policy_path);
  if (ckpt.policy.layer_sizes() != cfg.layer_sizes()) {
    throw ConfigError("checkpoint architecture does not match the config");
  }
  const ControlAffineSystem sys = make_system(cfg.system);
  const Ensemble target = target_samples(cfg);
  const Ensemble final = evaluate_rollout(ckpt.policy, sys, cfg.initial, cfg.eval_config());

  EvalMetrics m;
  m.final_kl = kl_blob(final, target, cfg.kernel()).value;
  m.moment1 = moment_diff(final, target, 1);
  m.moment2 = moment_diff(final, target, 2);
  if (cfg.eval_size <= 512) {
    const Eigen::Index n = std::min(final.size(), target.size());
    m.w2 = wasserstein2_exact(Ensemble(final.states.leftCols(n), final.time),
                              Ensemble(target.states.leftCols(n), target.time));
  }

  ordered_json j;
  j["final_kl"] = m.final_kl;
  j["w2"] = m.w2 ? ordered_json(*m.w2) : ordered_json(nullptr);
  j["moment_diffs"] = {{"order1", m.moment1}, {"order2", m.moment2}};
  j["eval_size"] = cfg.eval_size;
  j["eval_seed"] = cfg.eval_seed;
  j["bandwidth"] = cfg.kernel_bandwidth();
  if (cfg.kl_threshold) {
    j["kl_threshold"] = *cfg.kl_threshold;
    j["below_threshold"] = m.final_kl <= *cfg.kl_threshold;
  }
  write_text(out / "metrics.json", j.dump(2) + "\n");
  log << "final_kl " << format_double(m.final_kl);
  if (m.w2) log << "  w2 " << format_double(*m.w2);
  log << "  moment1 " << format_double(m.moment1) << "  moment2 " << format_double(m.moment2) << "\n";
  return m;
}

Eigen::VectorXd parse_point(const std::string& text) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const std::string cell = text.substr(pos, comma - pos);
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw ConfigError("bad point coordinate \"" + cell + "\"");
    }
    v.push_back(x);
    pos = comma + 1;
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int cmd_rank(const std::string& system, const Eigen::VectorXd& point, int depth) {
  ControlAffineSystem sys;
  try {
    sys = make_system(system);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (point.size() != sys.state_dim) {
    throw ConfigError("point has " + std::to_string(point.size()) + " coordinates, system " + system + " needs " +
                      std::to_string(sys.state_dim));
  }
  if (depth < 0) throw ConfigError("depth must be non-negative");
  return chow_rashevsky_rank(sys, point, depth);
}

PdeOutcome cmd_verify_pde(const PdeConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
  cfg.validate();
  const ControlAffineSystem sys = make_system(cfg.system);
  PdeOutcome res;
  const auto& th = cfg.thresholds;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) res.failures.push_back(what);
  };

  std::vector<std::pair<std::vector<int>, double>> levels{{cfg.grid.cells, cfg.coarse_dt()}};
  if (!cfg.refined_cells.empty()) levels.emplace_back(cfg.refined_cells, cfg.coarse_dt() / cfg.refine_dt_factor);

  ordered_json jlevels = ordered_json::array();
  for (std::size_t l = 0; l < levels.size(); ++l) {
    pde::GridSpec grid = cfg.grid;
    grid.cells = levels[l].first;
    const pde::SubLaplacian ops = pde::assemble_sub_laplacian(grid, sys);
    if (l == 0) {
      res.constant_defect = pde::constant_defect(ops.op);
      check(res.constant_defect <= th.constant_defect, "constant vector not in the kernel");
      if (cfg.spectral_gap) {
        res.gap = pde::spectral_gap(ops.op, cfg.seed);
        check(res.gap->lambda2 > 0.0, "spectral gap is not positive");
      }
    }
    const pde::GridField target = pde::mode_density(grid, cfg.floor, cfg.modes);
    pde::TrackingConfig tcfg{cfg.horizon, levels[l].second, cfg.poisson};
    PdeLevel level{levels[l].first, levels[l].second, pde::exact_tracking_run(target, ops, tcfg)};
    const auto& r = level.report;

    std::string label;
    for (std::size_t a = 0; a < level.cells.size(); ++a) label += (a ? "x" : "") + std::to_string(level.cells[a]);
    log << "grid " << label << "  dt " << format_double(level.dt) << "  steps " << r.steps << "  max error "
        << format_double(r.max_error) << "  poisson residual " << format_double(r.max_poisson_residual) << "\n";
    check(r.max_poisson_residual <= th.poisson_residual, "Poisson residual above threshold on " + label);
    if (cfg.check_phi) {
      log << "  max |phi - p^f| offset " << format_double(r.max_phi_offset) << "\n";
      check(r.max_phi_offset <= th.phi_offset, "phi differs from the forward density on " + label);
    }
    if (l == 0) check(r.max_error <= th.max_error, "tracking error above threshold on " + label);

    jlevels.push_back({{"cells", level.cells},
                       {"dt", level.dt},
                       {"steps", r.steps},
                       {"max_error", r.max_error},
                       {"max_phi_offset", r.max_phi_offset},
                       {"max_poisson_residual", r.max_poisson_residual},
                       {"cg_iterations", r.cg_iterations},
                       {"min_density", r.min_density},
                       {"max_cfl", r.max_cfl},
                       {"mass_drift", r.mass_drift},
                       {"times", r.times},
                       {"errors", r.errors}});
    std::string field;
    for (Eigen::Index c = 0; c < r.final_density.values.size(); ++c) {
      field += format_double(r.final_density.values[c]) + "," + format_double(target.values[c]) + "\n";
    }
    write_text(out / ("density_" + label + ".csv"), "controlled,target\n" + field);
    res.levels.push_back(std::move(level));
  }
  if (res.levels.size() == 2) {
    res.improvement = res.levels[0].report.max_error / res.levels[1].report.max_error;
    log << "refinement improvement " << format_double(*res.improvement) << "x\n";
    check(*res.improvement > 1.0 && *res.improvement >= th.min_improvement, "refinement did not reduce the error enough");
  }
  res.passed = res.failures.empty();

  ordered_json j;
  j["name"] = cfg.name;
  j["system"] = cfg.system;
  j["horizon"] = cfg.horizon;
  j["constant_defect"] = res.constant_defect;
  if (res.gap) j["spectral_gap"] = {{"lambda2", res.gap->lambda2}, {"lambda_max", res.gap->lambda_max}};
  j["improvement"] = res.improvement ? ordered_json(*res.improvement) : ordered_json(nullptr);
  j["levels"] = std::move(jlevels);
  j["passed"] = res.passed;
  j["failures"] = res.failures;
  write_text(out / "report.json", j.dump(2) + "\n");
  if (res.gap) log << "spectral gap " << format_double(res.gap->lambda2) << "\n";
  for (const auto& f : res.failures) log << "FAILED: " << f << "\n";
  return res;
}

}  // namespace ddpmctl::app
