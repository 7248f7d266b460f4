#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "neurodiff/autodiff.hpp"
#include "neurodiff/callbacks.hpp"
#include "neurodiff/conditions.hpp"
#include "neurodiff/generators.hpp"
#include "neurodiff/losses.hpp"
#include "neurodiff/network.hpp"
#include "neurodiff/optim.hpp"
#include "neurodiff/state.hpp"

namespace neurodiff {

struct ResidualContext {
  Graph& graph;
  // Trial solutions, one N x 1 column per unknown.
  std::span<const Var> u;
  // Coordinate columns (N x 1), differentiable.
  std::span<const Var> coords;
  // Bundle parameters by name (N x 1 columns); empty for a plain fit.
  const ParamBindings& params;

  // Throws when `name` is not a bundle parameter.
  Var param(const std::string& name) const;
};

// One residual column (N x 1) per equation.
using ResidualFn = std::function<std::vector<Var>(const ResidualContext&)>;

struct Problem {
  ResidualFn residual;
  std::size_t n_unknowns = 1;
  std::vector<std::string> coord_names;
  Generator train;
  Generator valid;
};

struct SolverConfig {
  // One network and one condition per unknown.
  std::vector<MLPSpec> networks;
  std::vector<Condition> conditions;
  OptimizerConfig optimizer = AdamConfig{};
  LossSpec loss;
  std::size_t epochs = 1000;
  std::size_t batches_per_epoch = 1;
  // Each batch is split into this many contiguous chunks whose gradients are
  // accumulated before the optimizer step.
  std::size_t accumulation_passes = 1;
  std::uint64_t seed = 0;
  std::ostream* log = nullptr;
};

// Frozen networks plus conditions; evaluation has no side effects.
class Solution {
 public:
  Solution(std::vector<MLP> networks, std::vector<Condition> conditions, std::size_t n_coords,
           BundleLayout layout = {});

  // inputs: N x (n_coords + layout.size()), columns coords then theta.
  // Returns N x n_unknowns.
  Tensor operator()(const Tensor& inputs) const;

  // Trial solutions on an existing graph; theta holds one N x 1 column per
  // bundle parameter in layout order. Network parameters enter as constants.
  std::vector<Var> build(Graph& graph, std::span<const Var> coords, std::span<const Var> theta) const;

  std::size_t n_coords() const noexcept { return n_coords_; }
  std::size_t n_unknowns() const noexcept { return networks_.size(); }
  const BundleLayout& layout() const noexcept { return layout_; }
  const std::vector<MLP>& networks() const noexcept { return networks_; }

 private:
  std::vector<MLP> networks_;
  std::vector<Condition> conditions_;
  std::size_t n_coords_;
  BundleLayout layout_;
};

enum class Strategy { best, latest };

SolverState fit(const Problem& problem, const SolverConfig& config, std::span<const Callback> callbacks = {});

// Networks take coords ++ theta_ic ++ theta_eq. Theta is sampled uniformly
// from the layout ranges jointly with the coordinates, for training and
// validation alike.
SolverState fit_bundle(const Problem& problem, const BundleLayout& layout, const SolverConfig& config,
                       std::span<const Callback> callbacks = {});

Solution get_solution(const SolverState& state, Strategy strategy = Strategy::best);

// Loss of the current networks on a batch, without touching parameters.
double evaluate_loss(const Problem& problem, const SolverState& state, const Tensor& batch);

struct InverseData {
  Tensor coords;  // N x n_coords
  Tensor values;  // N x n_unknowns
};

struct InverseResult {
  std::vector<double> theta;  // layout order
  double loss = 0.0;          // mean squared mismatch at theta
  std::size_t steps = 0;
};

// Plain gradient descent on the mean squared data mismatch with respect to
// theta, network parameters frozen; theta is clipped to the layout ranges
// after every step.
InverseResult fit_inverse(const Solution& solution, const InverseData& data, std::vector<double> init_theta,
                          std::size_t steps, double lr);

// One row per epoch: epoch,train_loss,valid_loss,loss_kind,lr
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);

}  // namespace neurodiff
