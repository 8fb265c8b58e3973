#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "ddpmctl/app/commands.hpp"

using namespace ddpmctl;
using namespace ddpmctl::app;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "experiment": "tiny",
  "system": "single_integrator_2",
  "domain": {"kind": "box", "lower": [-2, -2], "upper": [2, 2]},
  "target": {"mean": [0, 0], "cov_scale": 0.2},
  "initial": {"kind": "uniform"},
  "horizon": 1.0,
  "dt": 0.1,
  "measurements": 3,
  "train_size": 40,
  "hidden": [8],
  "optimizer": {"lr": 0.01},
  "epochs": 4,
  "eval_size": 64,
  "seed": 5
})";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ddpmctl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    write_text(dir_ / name, text);
    return dir_ / name;
  }

  int run(const std::string& args) {
    const std::string cmd = std::string(DDPMCTL_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string stdout_text() { return read_text(dir_ / "stdout.txt"); }

  fs::path dir_;
};

std::string with(const std::string& base, const std::string& key, const std::string& value) {
  // Replaces or appends a top-level key in the tiny config.
  const auto pos = base.find("\"" + key + "\"");
  if (pos == std::string::npos) return base.substr(0, base.rfind('}')) + ",\n  \"" + key + "\": " + value + "\n}";
  const auto colon = base.find(':', pos);
  auto end = base.find(",\n", colon);
  if (end == std::string::npos) end = base.rfind('\n');
  return base.substr(0, colon + 1) + " " + value + base.substr(end);
}

}  // namespace

TEST(Config, ParsesAndEchoesLosslessly) {
  const auto cfg = parse_run_config(kTinyConfig);
  EXPECT_EQ(cfg.system, "single_integrator_2");
  EXPECT_DOUBLE_EQ(cfg.kernel_bandwidth(), 0.4);
  EXPECT_EQ(cfg.layer_sizes(), (std::vector<int>{3, 8, 2}));
  const auto again = parse_run_config(to_json(cfg));
  EXPECT_EQ(to_json(again), to_json(cfg));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_run_config(with(kTinyConfig, "epoch", "3")), ConfigError);
  EXPECT_THROW(parse_run_config(with(kTinyConfig, "epochs", "0")), ConfigError);
  EXPECT_THROW(parse_run_config(with(kTinyConfig, "dt", "0.3")), ConfigError);
  EXPECT_THROW(parse_run_config(with(kTinyConfig, "system", "\"bicycle\"")), ConfigError);
  EXPECT_THROW(parse_run_config(with(kTinyConfig, "target", R"({"mean": [0], "cov_scale": 0.2})")), ConfigError);
  EXPECT_THROW(parse_run_config(with(kTinyConfig, "optimizer", R"({"learning_rate": 0.1})")), ConfigError);
  EXPECT_THROW(parse_run_config("{not json"), ConfigError);
}

TEST(Config, UnboundedUniformRejected) {
  auto text = with(kTinyConfig, "domain", R"({"kind": "unbounded"})");
  EXPECT_THROW(parse_run_config(text), ConfigError);
  text = with(text, "initial", R"({"kind": "gaussian", "mean": [0, 0], "cov_scale": 1})");
  EXPECT_NO_THROW(parse_run_config(text));
}

TEST(Config, PdeStabilityChecked) {
  const std::string pde = R"({"system": "single_integrator_2", "cells": [8, 8], "lower": [0, 0], "upper": [1, 1],
    "boundary": ["zero_flux", "zero_flux"], "horizon": 0.01, "dt": 0.01})";
  EXPECT_THROW(parse_pde_config(pde), ConfigError);
}

TEST_F(CliTest, RankSubcommand) {
  EXPECT_EQ(run("rank unicycle 0,0,0 1"), 0);
  EXPECT_EQ(stdout_text(), "3\n");
  EXPECT_EQ(run("rank single_integrator_2 0,0 0"), 0);
  EXPECT_EQ(stdout_text(), "2\n");
  EXPECT_EQ(run("rank chained_5d 0,0,0,0,0 3"), 0);
  EXPECT_EQ(stdout_text(), "5\n");
  EXPECT_EQ(run("rank unicycle 0,0 1"), 2);
  EXPECT_EQ(run("rank unicycle 0,x,0 1"), 2);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("forward --config " + (dir_ / "missing.json").string()), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  const auto bad = write("bad.json", with(kTinyConfig, "epochs", "0"));
  EXPECT_EQ(run("train --config " + bad.string() + " --out " + (dir_ / "run").string()), 2);
}

TEST_F(CliTest, ForwardIsByteIdenticalOnRerun) {
  const auto cfg = write("cfg.json", kTinyConfig);
  ASSERT_EQ(run("forward --config " + cfg.string() + " --out " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("forward --config " + cfg.string() + " --out " + (dir_ / "b").string() + " --threads 2"), 0);
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshots/forward_%03d.csv", i);
    ASSERT_TRUE(fs::exists(dir_ / "a" / name));
    EXPECT_EQ(read_text(dir_ / "a" / name), read_text(dir_ / "b" / name));
  }
  EXPECT_FALSE(fs::exists(dir_ / "a" / "snapshots/forward_003.csv"));
  ASSERT_EQ(run("forward --config " + cfg.string() + " --out " + (dir_ / "c").string() + " --seed 6"), 0);
  EXPECT_NE(read_text(dir_ / "a" / "snapshots/forward_002.csv"), read_text(dir_ / "c" / "snapshots/forward_002.csv"));
}

TEST_F(CliTest, ForwardFiveDimensionalConfig) {
  auto text = with(kTinyConfig, "system", "\"chained_5d\"");
  text = with(text, "domain", R"({"kind": "box", "lower": [-4, -4, -4, -4, -4], "upper": [4, 4, 4, 4, 4]})");
  text = with(text, "target", R"({"mean": [0, 0, 0, 0, 0], "cov_scale": 0.2})");
  text = with(text, "train_size", "500");
  text = with(text, "measurements", "6");
  text = with(text, "horizon", "0.5");
  const auto cfg = write("c5.json", text);
  std::ostringstream log;
  const auto s = cmd_forward(load_run_config(cfg), dir_ / "out", log);
  EXPECT_EQ(s.trace.snapshots.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_TRUE(fs::exists(dir_ / "out" / ("snapshots/forward_00" + std::to_string(i) + ".csv")));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest.json"));
  const auto back = read_ensemble_csv(dir_ / "out" / "snapshots/forward_005.csv", 0.5);
  EXPECT_EQ(back.states, s.trace.snapshots.back().states);
}

TEST_F(CliTest, TrainWritesRunDirectoryDeterministically) {
  const auto cfg = write("cfg.json", kTinyConfig);
  ASSERT_EQ(run("train --config " + cfg.string() + " --out " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("train --config " + cfg.string() + " --out " + (dir_ / "b").string()), 0);
  for (const auto* f : {"config.json", "history.csv", "policy.json"}) {
    ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    EXPECT_EQ(read_text(dir_ / "a" / f), read_text(dir_ / "b" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir_ / "a" / "timing.csv"));
  EXPECT_NE(stdout_text().find("final KL"), std::string::npos);
  // The echoed config reproduces the run.
  ASSERT_EQ(run("train --config " + (dir_ / "a" / "config.json").string() + " --out " + (dir_ / "c").string()), 0);
  EXPECT_EQ(read_text(dir_ / "a" / "history.csv"), read_text(dir_ / "c" / "history.csv"));
}

TEST_F(CliTest, ResumeMatchesUninterruptedRun) {
  const auto full = parse_run_config(kTinyConfig);
  auto half = full;
  half.epochs = 2;
  std::ostringstream log;
  const auto a = cmd_train(full, dir_ / "full", log);
  cmd_train(half, dir_ / "resumed", log);
  const auto b = cmd_train(full, dir_ / "resumed", log, dir_ / "resumed" / "policy.json");
  ASSERT_EQ(b.history.epochs.size(), 4u);
  EXPECT_EQ(b.history.epochs[2].cost, a.history.epochs[2].cost);
  EXPECT_EQ(read_text(dir_ / "full" / "history.csv"), read_text(dir_ / "resumed" / "history.csv"));
  EXPECT_EQ(read_text(dir_ / "full" / "policy.json"), read_text(dir_ / "resumed" / "policy.json"));
}

TEST_F(CliTest, EvalWritesMetricsAndRejectsBadCheckpoints) {
  const auto cfg_path = write("cfg.json", kTinyConfig);
  ASSERT_EQ(run("train --config " + cfg_path.string() + " --out " + (dir_ / "run").string()), 0);
  ASSERT_EQ(run("eval --config " + cfg_path.string() + " --policy " + (dir_ / "run" / "policy.json").string() +
                " --out " + (dir_ / "run").string()),
            0);
  const auto metrics = read_text(dir_ / "run" / "metrics.json");
  EXPECT_NE(metrics.find("\"final_kl\""), std::string::npos);
  EXPECT_NE(metrics.find("\"w2\""), std::string::npos);
  EXPECT_EQ(metrics.find("\"w2\": null"), std::string::npos);

  write("corrupt.json", "{\"layer_sizes\": [3, 8");
  EXPECT_EQ(run("eval --config " + cfg_path.string() + " --policy " + (dir_ / "corrupt.json").string() + " --out " +
                (dir_ / "run").string()),
            2);
  const auto other = write("other.json", with(kTinyConfig, "hidden", "[16]"));
  EXPECT_EQ(run("eval --config " + other.string() + " --policy " + (dir_ / "run" / "policy.json").string() +
                " --out " + (dir_ / "run").string()),
            2);
  const auto strict = write("strict.json", with(kTinyConfig, "kl_threshold", "-100"));
  EXPECT_EQ(run("eval --config " + strict.string() + " --policy " + (dir_ / "run" / "policy.json").string() +
                " --out " + (dir_ / "run").string()),
            1);
}

TEST_F(CliTest, VerifyPdeSmallCase) {
  const auto cfg = write("pde.json", R"({
    "name": "small", "system": "single_integrator_2", "cells": [12, 12], "refined_cells": [24, 24],
    "lower": [0, 0], "upper": [1, 1], "boundary": ["zero_flux", "zero_flux"],
    "horizon": 0.005, "check_phi": true, "poisson": {"rel_tol": 1e-13},
    "target": {"floor": 1.0, "modes": [{"amplitude": 0.5, "wavenumbers": [1, 1]}]},
    "thresholds": {"max_error": 0.05, "min_improvement": 1.0}
  })");
  EXPECT_EQ(run("verify-pde --config " + cfg.string() + " --out " + (dir_ / "pde").string()), 0) << stdout_text();
  EXPECT_TRUE(fs::exists(dir_ / "pde" / "report.json"));
  const auto strict = write("strict.json", R"({
    "name": "small", "system": "single_integrator_2", "cells": [12, 12],
    "lower": [0, 0], "upper": [1, 1], "boundary": ["zero_flux", "zero_flux"],
    "horizon": 0.005, "thresholds": {"max_error": 1e-12},
    "target": {"floor": 1.0, "modes": [{"amplitude": 0.5, "wavenumbers": [1, 1]}]}
  })");
  EXPECT_EQ(run("verify-pde --config " + strict.string() + " --out " + (dir_ / "pde2").string()), 1);
}

TEST(BundledConfigs, AllParse) {
  const fs::path dir = DDPMCTL_EXPERIMENTS_DIR;
  for (const auto* name : {"chained5d.json", "unicycle.json", "integrator2d.json"}) {
    EXPECT_NO_THROW(load_run_config(dir / name)) << name;
  }
  for (const auto* name : {"pde_fully_actuated.json", "pde_unicycle.json"}) {
    EXPECT_NO_THROW(load_pde_config(dir / name)) << name;
  }
}
