#include <benchmark/benchmark.h>

#include "farmsim/workload.hpp"

using namespace farmsim;

namespace {

void BM_BuildSchedule(benchmark::State& state) {
  workload::WorkloadSpec spec;
  for (auto _ : state) {
    auto schedule = workload::build_schedule(spec);
    benchmark::DoNotOptimize(schedule.total_span_us);
  }
}

void BM_BuildTasks(benchmark::State& state) {
  workload::WorkloadSpec spec;
  spec.task_count = static_cast<std::uint64_t>(state.range(0));
  auto schedule = workload::build_schedule(spec);
  for (auto _ : state) {
    auto tasks = workload::build_tasks(schedule, spec);
    benchmark::DoNotOptimize(tasks.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BuildTasksZipf(benchmark::State& state) {
  workload::WorkloadSpec spec;
  spec.task_count = static_cast<std::uint64_t>(state.range(0));
  spec.selection = workload::Selection::Zipf;
  spec.zipf_s = 1.0;
  auto schedule = workload::build_schedule(spec);
  for (auto _ : state) {
    auto tasks = workload::build_tasks(schedule, spec);
    benchmark::DoNotOptimize(tasks.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BuildSchedule);
BENCHMARK(BM_BuildTasks)->Arg(50'000);
BENCHMARK(BM_BuildTasksZipf)->Arg(50'000);
