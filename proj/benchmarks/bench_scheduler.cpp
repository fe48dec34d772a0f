#include <benchmark/benchmark.h>

#include <vector>

#include "farmsim/scheduler.hpp"

using namespace farmsim;

namespace {

constexpr int kExecutors = 32;
constexpr std::uint64_t kFiles = 10'000;
constexpr std::size_t kBacklog = 4'000;

// One full dispatch round trip against a deep backlog: candidate choice,
// window-bounded selection, assignment, completion, refill. This is the
// regime the window cost shows up in; an idle farm would hide it.
void bench_policy(benchmark::State& state, sched::DispatchPolicy policy) {
  std::vector<TaskSpec> tasks(kBacklog);
  for (std::size_t i = 0; i < kBacklog; ++i) {
    tasks[i].id = static_cast<TaskId>(i);
    tasks[i].required_objects = {static_cast<ObjectId>(i % kFiles)};
    tasks[i].compute_us = 10'000;
  }

  sched::SchedulerConfig config;
  config.policy = policy;
  sched::Scheduler s(config, &tasks);
  for (NodeId e = 0; e < kExecutors; ++e) {
    s.register_executor(e, 2);
    std::vector<ObjectId> cached;
    for (ObjectId f = e; f < kFiles; f += kExecutors)
      cached.push_back(f);
    s.on_index_update(e, cached, {});
  }
  for (TaskId t = 0; t < static_cast<TaskId>(kBacklog); ++t) s.enqueue(t);

  for (auto _ : state) {
    NodeId exec = s.notify_candidate();
    if (exec == kNoNode) {
      state.SkipWithError("no candidate");
      return;
    }
    auto picked = s.select_tasks_for_pickup(exec);
    if (!picked.empty()) {
      s.on_tasks_assigned(exec, static_cast<int>(picked.size()));
      for (TaskId t : picked) {
        s.on_task_finished(exec);
        s.enqueue(t);  // keep the backlog depth constant
      }
    }
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_DispatchFirstAvailable(benchmark::State& state) {
  bench_policy(state, sched::DispatchPolicy::FirstAvailable);
}
void BM_DispatchFirstCacheAvailable(benchmark::State& state) {
  bench_policy(state, sched::DispatchPolicy::FirstCacheAvailable);
}
void BM_DispatchMaxCacheHit(benchmark::State& state) {
  bench_policy(state, sched::DispatchPolicy::MaxCacheHit);
}
void BM_DispatchMaxComputeUtil(benchmark::State& state) {
  bench_policy(state, sched::DispatchPolicy::MaxComputeUtil);
}
void BM_DispatchGoodCacheCompute(benchmark::State& state) {
  bench_policy(state, sched::DispatchPolicy::GoodCacheCompute);
}

}  // namespace

BENCHMARK(BM_DispatchFirstAvailable);
BENCHMARK(BM_DispatchFirstCacheAvailable);
BENCHMARK(BM_DispatchMaxCacheHit);
BENCHMARK(BM_DispatchMaxComputeUtil);
BENCHMARK(BM_DispatchGoodCacheCompute);
