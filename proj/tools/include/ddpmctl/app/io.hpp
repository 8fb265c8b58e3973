#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "ddpmctl/ensemble.hpp"
#include "ddpmctl/policy.hpp"
#include "ddpmctl/reverse.hpp"

namespace ddpmctl::app {

/// Input file could not be read or parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One particle per row, header x0..x{d-1}, 17 significant digits.
void write_ensemble_csv(const std::filesystem::path& path, const Ensemble& e);
Ensemble read_ensemble_csv(const std::filesystem::path& path, double time = 0.0);

struct Checkpoint {
  MlpPolicy policy;
  /// Present when the checkpoint can resume training.
  std::optional<AdamState> optimizer;
  std::size_t next_epoch = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws ParseError on malformed JSON or inconsistent sizes.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string format_double(double v);

/// epoch,cost,final_kl
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);
/// epoch,seconds
void write_timing_csv(const std::filesystem::path& path, const TrainHistory& history);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace ddpmctl::app
