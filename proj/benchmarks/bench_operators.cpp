#include <benchmark/benchmark.h>

#include "neurodiff/network.hpp"
#include "neurodiff/operators.hpp"
#include "neurodiff/rng.hpp"

using namespace neurodiff;

namespace {

struct Setup {
  Graph graph;
  Coords q;
  Var f;
  VectorField F;
};

// Coordinates inside every system's regular region, fields from random tanh
// networks.
void build(Setup& s, std::size_t n) {
  Rng rng(1);
  std::vector<double> a(n), b(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform(0.5, 2.0);
    b[i] = rng.uniform(0.3, 2.8);
    c[i] = rng.uniform(-1.0, 1.0);
  }
  s.q = {s.graph.variable(Tensor::column(a)), s.graph.variable(Tensor::column(b)),
         s.graph.variable(Tensor::column(c))};
  const Var cols[] = {s.q[0], s.q[1], s.q[2]};
  const Var x = concat_cols(cols);
  MLPSpec spec;
  spec.input_dim = 3;
  spec.seed = 2;
  static const MLP scalar = MLP::init(spec);
  spec.output_dim = 3;
  spec.seed = 3;
  static const MLP vector = MLP::init(spec);
  s.f = scalar.bind(s.graph, false)(x);
  const Var v = vector.bind(s.graph, false)(x);
  s.F = {column(v, 0), column(v, 1), column(v, 2)};
}

void run_op(benchmark::State& state, OperatorKind kind, CoordSystem system, Mode mode) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    Setup s;
    build(s, n);
    state.ResumeTiming();
    switch (kind) {
      case OperatorKind::grad: benchmark::DoNotOptimize(ops::grad(s.f, s.q, system, mode)); break;
      case OperatorKind::div: benchmark::DoNotOptimize(ops::div(s.F, s.q, system, mode)); break;
      case OperatorKind::curl: benchmark::DoNotOptimize(ops::curl(s.F, s.q, system, mode)); break;
      case OperatorKind::laplace: benchmark::DoNotOptimize(ops::laplacian(s.f, s.q, system, mode)); break;
      case OperatorKind::vector_laplace: benchmark::DoNotOptimize(ops::vector_laplacian(s.F, s.q, system, mode)); break;
    }
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

#define ND_BENCH(kind, sys)                                                                                \
  BENCHMARK_CAPTURE(run_op, sys##_##kind##_naive, OperatorKind::kind, CoordSystem::sys, Mode::naive)        \
      ->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);                                               \
  BENCHMARK_CAPTURE(run_op, sys##_##kind##_fused, OperatorKind::kind, CoordSystem::sys, Mode::fused)        \
      ->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond)

ND_BENCH(grad, cartesian);
ND_BENCH(grad, spherical);
ND_BENCH(div, cylindrical);
ND_BENCH(laplace, spherical);
ND_BENCH(curl, cylindrical);
ND_BENCH(vector_laplace, cartesian);

}  // namespace
