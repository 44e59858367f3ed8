// Serial reference kernels against their OpenMP versions.

#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "dirac/kernels.hpp"

namespace {

using namespace dirac;

const DiracCoefficients kWavy{{0.3, {0.5}, {0.2}}, {0.0, {0.1}, {0.4}}};

std::vector<double> energies(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = -4.0 + 8.0 * static_cast<double>(i) / static_cast<double>(n);
  return out;
}

void BM_TraceScanSerial(benchmark::State& state) {
  const auto lambdas = energies(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::trace_scan_serial(kWavy, lambdas, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TraceScanParallel(benchmark::State& state) {
  const auto lambdas = energies(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::trace_scan_parallel(kWavy, lambdas, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// the oscillatory integrand sin(theta) / t with theta = 2 t + ln t
double integrand(double t) { return std::sin(2.0 * t + std::log(t)) / t; }

void BM_PanelsSerial(benchmark::State& state) {
  const kernels::PanelGrid grid{100.0, 100.0 + 0.25 * static_cast<double>(state.range(0)), 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::panel_integrals_serial(integrand, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PanelsParallel(benchmark::State& state) {
  const kernels::PanelGrid grid{100.0, 100.0 + 0.25 * static_cast<double>(state.range(0)), 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::panel_integrals_parallel(integrand, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_TraceScanSerial)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TraceScanParallel)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PanelsSerial)->Arg(1 << 14)->Arg(1 << 18)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PanelsParallel)->Arg(1 << 14)->Arg(1 << 18)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
