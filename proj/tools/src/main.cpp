#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ddpmctl/app/commands.hpp"
#include "ddpmctl/error.hpp"
#include "ddpmctl/parallel.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string policy;
  std::string resume;
  std::string system;
  std::string point;
  int depth = 1;
};

void add_common(CLI::App* cmd, Options& o, bool with_seed) {
  cmd->add_option("--config", o.config, "JSON configuration file")->required();
  cmd->add_option("--out", o.out, "Output directory (default runs/<experiment>)");
  if (with_seed) cmd->add_option("--seed", o.seed, "Override the configured seed");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
}

std::filesystem::path out_dir(const Options& o, const std::string& name) {
  return o.out.empty() ? std::filesystem::path("runs") / name : std::filesystem::path(o.out);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ddpmctl;
  CLI::App app{"Diffusion-style density control of driftless control-affine systems"};
  app.require_subcommand(1);
  Options o;

  auto* forward = app.add_subcommand("forward", "Simulate the reflected forward (noising) process");
  add_common(forward, o, true);
  auto* train = app.add_subcommand("train", "Train a feedback policy for the reverse process");
  add_common(train, o, true);
  train->add_option("--resume", o.resume, "Checkpoint to resume from");
  auto* eval = app.add_subcommand("eval", "Evaluate a trained policy");
  add_common(eval, o, true);
  eval->add_option("--policy", o.policy, "Policy checkpoint (policy.json)")->required();
  auto* rank = app.add_subcommand("rank", "Rank of the control Lie algebra at a point");
  rank->add_option("system", o.system, "System name")->required();
  rank->add_option("point", o.point, "Comma-separated coordinates")->required();
  rank->add_option("depth", o.depth, "Bracket depth")->required()->check(CLI::NonNegativeNumber);
  auto* pde = app.add_subcommand("verify-pde", "Grid verification of exact density tracking");
  add_common(pde, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (o.threads > 0) set_thread_count(static_cast<std::size_t>(o.threads));
    if (*rank) {
      std::cout << app::cmd_rank(o.system, app::parse_point(o.point), o.depth) << "\n";
      return kOk;
    }
    if (*pde) {
      const auto cfg = app::load_pde_config(o.config);
      const auto res = app::cmd_verify_pde(cfg, out_dir(o, cfg.name), std::cout);
      return res.passed ? kOk : kFailure;
    }

    auto cfg = app::load_run_config(o.config);
    if (*forward) {
      if (o.seed) cfg.seed = *o.seed;
      app::cmd_forward(cfg, out_dir(o, cfg.experiment), std::cout);
    } else if (*train) {
      if (o.seed) cfg.seed = *o.seed;
      std::optional<std::filesystem::path> resume;
      if (!o.resume.empty()) resume = o.resume;
      app::cmd_train(cfg, out_dir(o, cfg.experiment), std::cout, resume);
    } else if (*eval) {
      if (o.seed) cfg.eval_seed = *o.seed;
      const auto m = app::cmd_eval(cfg, o.policy, out_dir(o, cfg.experiment), std::cout);
      if (cfg.kl_threshold && !(m.final_kl <= *cfg.kl_threshold)) {
        std::cerr << "final KL " << app::format_double(m.final_kl) << " is above the threshold "
                  << app::format_double(*cfg.kl_threshold) << "\n";
        return kFailure;
      }
    }
    return kOk;
  } catch (const app::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const app::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
