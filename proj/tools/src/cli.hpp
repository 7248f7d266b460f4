#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "neurodiff/network.hpp"
#include "neurodiff/presets.hpp"

namespace neurodiff::cli {

enum ExitCode : int { kOk = 0, kTrainingFailed = 1, kUsage = 2 };

// Fully resolved settings of a solve or bundle run; this is what
// run-manifest.json records.
struct RunConfig {
  std::string command = "solve";
  std::string preset;
  std::size_t dim = 3;
  bool allow_large = false;
  std::size_t epochs = 0;
  std::size_t batch_size = 512;
  std::size_t batches_per_epoch = 1;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  std::vector<std::size_t> hidden;
  Activation activation = Activation::tanh;
  LossKind loss = LossKind::mse;
  std::string precision = "f64";
  // Skip the preset's step-decay learning-rate schedule.
  bool constant_lr = false;
  std::filesystem::path out;
  std::size_t log_every = 0;
};

std::vector<std::size_t> parse_sizes(const std::string& text);

// Resolves flags against the preset defaults.
RunConfig resolve(const std::string& command, const std::string& preset, const PresetOptions& options,
                  const std::string& precision, const std::filesystem::path& out);
PresetOptions to_options(const RunConfig& config);

std::string manifest_json(const RunConfig& config);
RunConfig parse_manifest(const std::string& text);

// Observations for invert: a CSV with header, one column per coordinate then
// one per unknown.
struct Observations {
  Tensor coords;
  Tensor values;
};
Observations read_observations(const std::filesystem::path& path, std::size_t n_coords, std::size_t n_unknowns);

// Entry point; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace neurodiff::cli
