#pragma once

// Built-in demonstration problems shared by the command-line tool and tests.
//
//   decay             u' + u = 0, u(0) = 1, t in [0, 2]
//   sho               u'' + u = 0, u(0) = 0, u'(0) = 1, t in [0, 2 pi]
//   heat              u_t = 0.01 lap u on [0, 1] x [0, 1]^D, u(0, x) = prod sin(pi x_d), u = 0 on faces
//   gravity           E' = 1/r^2 on [1, 10], E(1) = -1, E -> 0 as r -> infinity
//   poisson-gaussian  lap u = (2 pi)^(-3/2) exp(-r^2 / 2) in spherical coordinates
//   decay-bundle      u' + lambda u = 0, u(0) = u0, with (u0, lambda) in [0.5, 2]^2
//   sho-bundle        u'' + u = 0, u(0) = u0, u'(0) = v0, with (u0, v0) in [0, 1]^2

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neurodiff/network.hpp"
#include "neurodiff/solver.hpp"

namespace neurodiff {

struct PresetOptions {
  std::size_t dim = 3;  // heat only
  bool allow_large = false;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  // Optimizer steps per epoch, each on a freshly sampled batch.
  std::optional<std::size_t> batches_per_epoch;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<std::vector<std::size_t>> hidden;
  std::optional<Activation> activation;
  std::optional<LossKind> loss;
  // Disables the preset's learning-rate schedule.
  bool constant_lr = false;
};

struct Preset {
  std::string name;
  Problem problem;
  SolverConfig config;
  BundleLayout layout;
  // coords then bundle parameters
  std::vector<std::string> input_names;
  // Exact solution at one input row; empty when none is known.
  std::function<double(std::span<const double>)> reference;
  // Rows written to solution.csv.
  Tensor grid;
  std::size_t batch_size = 512;
  // Learning-rate schedule as callbacks; empty means a constant rate.
  std::vector<Callback> callbacks;
};

// Callbacks that multiply the base rate by factors[i] once
// fractions[i] * epochs epochs have completed.
std::vector<Callback> step_decay(double lr, std::size_t epochs, std::span<const double> fractions,
                                 std::span<const double> factors);

inline constexpr std::size_t kHeatMaxDesktopDim = 3;
inline constexpr std::size_t kHeatMaxDim = 10;

const std::vector<std::string>& solve_preset_names();
const std::vector<std::string>& bundle_preset_names();

// Throws on an unknown name or out-of-range options.
Preset make_preset(std::string_view name, const PresetOptions& options = {});

// u(r) of the Gaussian-charge potential with the boundary values used by the
// poisson-gaussian preset: -erf(r / sqrt 2) / (4 pi r).
double gaussian_potential(double r);

struct SolutionTable {
  std::vector<std::string> header;
  Tensor rows;
};

// grid columns, then u (per unknown), then u_exact and abs_error when the
// preset has a reference.
SolutionTable solution_table(const Preset& preset, const Solution& solution);
void write_solution_csv(std::ostream& out, const SolutionTable& table);

}  // namespace neurodiff
