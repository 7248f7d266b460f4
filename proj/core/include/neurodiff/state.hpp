#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "neurodiff/conditions.hpp"
#include "neurodiff/generators.hpp"
#include "neurodiff/losses.hpp"
#include "neurodiff/network.hpp"
#include "neurodiff/optim.hpp"
#include "neurodiff/rng.hpp"

namespace neurodiff {

struct ParamRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

// Extra network inputs of a bundle. Networks see coordinates, then theta_ic,
// then theta_eq.
struct BundleLayout {
  std::vector<ParamRange> theta_ic;
  std::vector<ParamRange> theta_eq;

  std::size_t size() const noexcept { return theta_ic.size() + theta_eq.size(); }
  bool empty() const noexcept { return size() == 0; }
  // theta_ic followed by theta_eq.
  std::vector<ParamRange> all() const;
  void validate() const;
};

struct MetricsRow {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_loss = 0.0;
  LossKind loss_kind = LossKind::mse;
  double lr = 0.0;
};

struct SolverState {
  std::size_t epoch = 0;  // completed epochs
  std::size_t step = 0;   // optimizer steps taken
  std::vector<MLP> networks;
  std::unique_ptr<Optimizer> optimizer;

  std::vector<double> train_history;
  std::vector<double> valid_history;
  std::vector<MetricsRow> metrics;

  std::vector<MLP> best_networks;
  std::size_t best_epoch = 0;
  double best_valid_loss = std::numeric_limits<double>::infinity();
  // Set when the epoch just finished improved the best validation loss.
  bool best_updated = false;

  Rng rng;

  // Controls mutated by callback actions.
  LossSpec loss;
  std::optional<Generator> train_generator;
  bool stop_requested = false;
  std::ostream* log = nullptr;

  // What a Solution needs besides the networks.
  std::vector<Condition> conditions;
  BundleLayout layout;
  std::size_t n_coords = 0;
};

// Training checkpoint: counters, networks (network file format each),
// optimizer moments and the rng position.
void save_state(const SolverState& state, const std::filesystem::path& path);
void write_state(const SolverState& state, std::ostream& out);

// Restores counters, networks, optimizer moments and rng into an existing
// state whose optimizer has the same type as the saved one.
void restore_state(SolverState& state, const std::filesystem::path& path);

// Only the networks of a state checkpoint.
std::vector<MLP> load_state_networks(const std::filesystem::path& path);

}  // namespace neurodiff
