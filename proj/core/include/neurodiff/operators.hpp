#pragma once

// Vector-calculus operators on per-sample fields in Cartesian (x, y, z),
// cylindrical (rho, phi, z) and spherical (r, theta, phi) coordinates, theta
// being the polar angle from +z.
//
// Mode::naive spends one reverse pass per partial derivative. Mode::fused gets
// every first-order partial of a scalar from a single pass and differentiates
// that gradient subgraph again for second-order terms, so it issues fewer
// passes for the same values.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "neurodiff/autodiff.hpp"

namespace neurodiff {

enum class CoordSystem { cartesian, cylindrical, spherical };
enum class Mode { naive, fused };

std::string_view to_string(CoordSystem system) noexcept;
CoordSystem parse_coord_system(std::string_view name);

using Coords = std::array<Var, 3>;
using VectorField = std::array<Var, 3>;

namespace ops {

VectorField grad(Var f, const Coords& q, CoordSystem system, Mode mode = Mode::fused);
Var div(const VectorField& F, const Coords& q, CoordSystem system, Mode mode = Mode::fused);
VectorField curl(const VectorField& F, const Coords& q, CoordSystem system, Mode mode = Mode::fused);
Var laplacian(Var f, const Coords& q, CoordSystem system, Mode mode = Mode::fused);
VectorField vector_laplacian(const VectorField& F, const Coords& q, CoordSystem system, Mode mode = Mode::fused);

// Throws when any sample sits on a coordinate singularity (rho = 0, r = 0 or
// sin(theta) = 0).
void check_coordinates(const Coords& q, CoordSystem system);

}  // namespace ops

enum class OperatorKind { grad, div, laplace, vector_laplace, curl };
std::string_view to_string(OperatorKind op) noexcept;

struct BenchRow {
  CoordSystem system;
  OperatorKind op;
  std::size_t batch;
  double naive_ms_mean, naive_ms_std;
  double fused_ms_mean, fused_ms_std;
  double speedup;
  // Largest |fused - naive| over every output entry of every repeat.
  double max_abs_diff;
};

struct BenchOptions {
  std::vector<std::size_t> sizes{4096};
  int repeats = 5;
  std::uint64_t seed = 0;
  // Hidden widths of the networks that produce the benchmarked fields.
  std::vector<std::size_t> hidden{32};
};

// Times naive and fused modes of each (system, operator) pair on fields produced
// by random tanh networks. 15 rows per batch size: cylindrical, spherical,
// cartesian, each with grad, divergence, laplace, vector_laplace, curl.
std::vector<BenchRow> bench_operators(const BenchOptions& options);

// Tolerance for the fused-vs-naive equality column.
inline constexpr double kFusedNaiveTolerance = 1e-12;

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace neurodiff
