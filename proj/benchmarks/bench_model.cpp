#include <benchmark/benchmark.h>

#include "farmsim/model.hpp"
#include "farmsim/runner.hpp"
#include "farmsim/simengine.hpp"

using namespace farmsim;

namespace {

void BM_CopyTime(benchmark::State& state) {
  Bits size = 80'000'000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        model::copy_time(size, 4'400'000'000, 1'600'000'000, 500));
    size += 8;  // defeat constant folding across iterations
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_WorkloadExecutionTime(benchmark::State& state) {
  double exec = 12'000.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        model::workload_execution_time(exec, 64, 250.0, 250'000));
    exec += 1.0;
  }
  state.SetItemsProcessed(state.iterations());
}

// The full closed-form prediction for the bundled reproduction workload.
void BM_ModelReport(benchmark::State& state) {
  sim::SimConfig config;
  for (auto _ : state) {
    auto report = run::model_report(config);
    benchmark::DoNotOptimize(report.wet_us);
  }
  state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(BM_CopyTime);
BENCHMARK(BM_WorkloadExecutionTime);
BENCHMARK(BM_ModelReport);
