#include <benchmark/benchmark.h>

#include "neurodiff/presets.hpp"
#include "neurodiff/solver.hpp"

using namespace neurodiff;

namespace {

// Cost of one training epoch per preset at the default batch size.
void epochs(benchmark::State& state, const char* name) {
  PresetOptions o;
  o.epochs = 10;
  const Preset p = make_preset(name, o);
  for (auto _ : state) {
    const SolverState s = p.layout.empty() ? fit(p.problem, p.config) : fit_bundle(p.problem, p.layout, p.config);
    benchmark::DoNotOptimize(s.valid_history.back());
  }
  state.counters["epochs"] = benchmark::Counter(10.0 * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}

BENCHMARK_CAPTURE(epochs, decay, "decay")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(epochs, sho_bundle, "sho-bundle")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(epochs, heat, "heat")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(epochs, poisson, "poisson-gaussian")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
