#pragma once

// Actions applied to a running fit after each epoch, guarded by composable
// trigger conditions. Conditions are pure functions of the solver state.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "neurodiff/generators.hpp"
#include "neurodiff/losses.hpp"
#include "neurodiff/state.hpp"

namespace neurodiff {

class Trigger {
 public:
  struct Node;

  static Trigger always();
  // Fires when the number of completed epochs is a multiple of n.
  static Trigger every_n_epochs(std::size_t n);
  // Fires once at least `epoch` epochs have completed.
  static Trigger after_epoch(std::size_t epoch);
  // |v[i] - v[i-1]| < delta for each of the last `window` transitions of the
  // validation history. With `relative`, the difference is divided by |v[i-1]|.
  static Trigger validation_converged(double delta, std::size_t window, bool relative = false);
  static Trigger best_model_updated();

  friend Trigger operator&(Trigger a, Trigger b);
  friend Trigger operator|(Trigger a, Trigger b);
  friend Trigger operator^(Trigger a, Trigger b);
  friend Trigger operator~(Trigger a);

  bool evaluate(const SolverState& state) const;
  std::string describe() const;

 private:
  explicit Trigger(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Definition of validation_converged over a plain history.
bool converged(const std::vector<double>& history, double delta, std::size_t window, bool relative = false);

namespace actions {

// Takes effect from the next epoch.
struct SetLoss {
  LossSpec loss;
};
struct SetLearningRate {
  double lr = 1e-3;
};
// The fit loop exits after the current epoch's callbacks.
struct EarlyStop {};
// "{epoch}" in the pattern is replaced by the completed epoch count.
struct SaveCheckpoint {
  std::string pattern;
};
// Written to SolverState::log (stderr when unset). Placeholders: {epoch},
// {train_loss}, {valid_loss}, {loss_kind}, {lr}.
struct LogMessage {
  std::string text;
};
struct SetBatchSize {
  std::size_t n = 512;
};
struct SetTrainGenerator {
  Generator generator;
};

}  // namespace actions

using Action = std::variant<actions::SetLoss, actions::SetLearningRate, actions::EarlyStop, actions::SaveCheckpoint,
                            actions::LogMessage, actions::SetBatchSize, actions::SetTrainGenerator>;

void apply(const Action& action, SolverState& state);

struct Callback {
  Trigger trigger;
  std::vector<Action> actions;
};

// Evaluates every trigger against the state as it stands, then applies the
// actions of the fired callbacks in registration order.
void run_callbacks(std::span<const Callback> callbacks, SolverState& state);

std::string format_message(const std::string& text, const SolverState& state);

}  // namespace neurodiff
