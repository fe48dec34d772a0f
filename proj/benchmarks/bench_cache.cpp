#include <benchmark/benchmark.h>

#include <random>

#include "farmsim/cache.hpp"

using namespace farmsim;

namespace {

// Steady-state churn: a cache holding ~12 files out of a 5000-file stream,
// so nearly every insert evicts.
void bench_churn(benchmark::State& state, cache::EvictionPolicy policy) {
  cache::NodeCache nc(1'000'000'000, policy, 1);
  std::mt19937_64 rng(2);
  for (auto _ : state) {
    ObjectId id = static_cast<ObjectId>(rng() % 5000);
    if (!nc.lookup(id)) nc.insert(id, 80'000'000);
    benchmark::DoNotOptimize(nc.used_bits());
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_CacheChurnLru(benchmark::State& state) {
  bench_churn(state, cache::EvictionPolicy::Lru);
}
void BM_CacheChurnFifo(benchmark::State& state) {
  bench_churn(state, cache::EvictionPolicy::Fifo);
}
void BM_CacheChurnLfu(benchmark::State& state) {
  bench_churn(state, cache::EvictionPolicy::Lfu);
}
void BM_CacheChurnRandom(benchmark::State& state) {
  bench_churn(state, cache::EvictionPolicy::Random);
}

void BM_CacheHitLookup(benchmark::State& state) {
  cache::NodeCache nc(1'000'000'000, cache::EvictionPolicy::Lru, 1);
  for (ObjectId id = 0; id < 12; ++id) nc.insert(id, 80'000'000);
  ObjectId id = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nc.lookup(id));
    id = (id + 1) % 12;
  }
  state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(BM_CacheChurnLru);
BENCHMARK(BM_CacheChurnFifo);
BENCHMARK(BM_CacheChurnLfu);
BENCHMARK(BM_CacheChurnRandom);
BENCHMARK(BM_CacheHitLookup);
