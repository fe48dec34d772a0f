#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "farmsim/config.hpp"
#include "farmsim/simengine.hpp"

using namespace farmsim;
using cfg::KeyValues;

namespace {

sim::SimConfig config_from(const std::string& text) {
  return cfg::build_config(KeyValues::from_string(text));
}

const metrics::TaskRecord& record_for(const sim::SimResult& res, TaskId id) {
  for (const auto& t : res.ledger.task_records())
    if (t.id == id) return t;
  REQUIRE(false);
  return res.ledger.task_records().front();
}

void write_trace(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << body;
}

}  // namespace

TEST_CASE("a compute-only farm finishes one compute time after the last "
          "arrival") {
  auto c = config_from(
      "workload.file_count = 0\n"
      "workload.task_count = 100\n"
      "workload.compute_us = 10000\n"
      "workload.overhead_us = 0\n"
      "workload.initial_rate_per_s = 1\n"
      "workload.max_rate_per_s = 1\n"
      "scheduler.policy = first-available\n"
      "node.cpu_slots = 1\n"
      "provisioner.min_nodes = 1\n"
      "provisioner.max_nodes = 1\n"
      "provisioner.disabled = true\n");
  auto res = sim::Engine(c).run();
  CHECK(res.wet_us == 100'010'000);
  CHECK(res.ideal_wet_us == 100'010'000);
  CHECK(res.ledger.completed_tasks() == 100);
  CHECK(res.ledger.hits_store() == 0);
  CHECK(res.ledger.bits_store() == 0);
}

TEST_CASE("a single cold fetch pays exactly the store transfer time") {
  auto c = config_from(
      "workload.file_count = 1\n"
      "workload.file_size_bits = 80000000\n"
      "workload.task_count = 1\n"
      "workload.compute_us = 0\n"
      "workload.overhead_us = 0\n"
      "workload.initial_rate_per_s = 1\n"
      "workload.max_rate_per_s = 1\n"
      "scheduler.policy = first-available\n"
      "node.cache_bits = 0\n"
      "store.bandwidth_bps = 80000000\n"
      "provisioner.min_nodes = 1\n"
      "provisioner.max_nodes = 1\n"
      "provisioner.disabled = true\n");
  auto res = sim::Engine(c).run();
  // Arrival at 1 s, an 80 Mb file over an 80 Mb/s store link takes 1 s.
  CHECK(record_for(res, 0).d_us == 1'000'000);
  CHECK(res.wet_us == 2'000'000);
  CHECK(res.ledger.hits_store() == 1);
  CHECK(res.ledger.bits_store() == 80'000'000ull);
}

TEST_CASE("concurrent transfers share the store link fairly") {
  write_trace("pair_sim.trace", "1000000\t0\t0\n1000000\t1\t0\n");
  auto c = config_from(
      "workload.selection = trace\n"
      "workload.trace_path = pair_sim.trace\n"
      "workload.file_size_bits = 80000000\n"
      "workload.overhead_us = 0\n"
      "scheduler.policy = first-available\n"
      "scheduler.batch_size = 2\n"
      "node.cache_bits = 0\n"
      "store.bandwidth_bps = 80000000\n"
      "provisioner.min_nodes = 1\n"
      "provisioner.max_nodes = 1\n"
      "provisioner.disabled = true\n");
  auto res = sim::Engine(c).run();
  // Two equal flows split 80 Mb/s for their whole lifetime: 2 s each.
  CHECK(record_for(res, 0).d_us == 2'000'000);
  CHECK(record_for(res, 1).d_us == 2'000'000);
  CHECK(res.wet_us == 3'000'000);
  std::remove("pair_sim.trace");
}

TEST_CASE("a transfer speeds up when a competing flow departs") {
  write_trace("stagger_sim.trace", "1000000\t0\t0\n1500000\t1\t0\n");
  auto c = config_from(
      "workload.selection = trace\n"
      "workload.trace_path = stagger_sim.trace\n"
      "workload.file_size_bits = 80000000\n"
      "workload.overhead_us = 0\n"
      "scheduler.policy = first-available\n"
      "node.cache_bits = 0\n"
      "store.bandwidth_bps = 80000000\n"
      "provisioner.min_nodes = 1\n"
      "provisioner.max_nodes = 1\n"
      "provisioner.disabled = true\n");
  auto res = sim::Engine(c).run();
  // First: 0.5 s alone at full rate, 1 s shared. Second: 1 s shared, then
  // 0.5 s alone. Both wait exactly 1.5 s for data.
  CHECK(record_for(res, 0).d_us == 1'500'000);
  CHECK(record_for(res, 1).d_us == 1'500'000);
  CHECK(res.wet_us == 3'000'000);
  std::remove("stagger_sim.trace");
}

TEST_CASE("identical seeds replay identical runs") {
  auto c = config_from(
      "preset = gcc-4gb\n"
      "workload.task_count = 3000\n"
      "engine.seed = 7\n");
  auto a = sim::Engine(c).run();
  auto b = sim::Engine(c).run();

  CHECK(a.wet_us == b.wet_us);
  CHECK(a.ideal_wet_us == b.ideal_wet_us);
  CHECK(a.ledger.hits_local() == b.ledger.hits_local());
  CHECK(a.ledger.hits_remote() == b.ledger.hits_remote());
  CHECK(a.ledger.hits_store() == b.ledger.hits_store());
  CHECK(a.ledger.bits_local() == b.ledger.bits_local());
  CHECK(a.ledger.bits_remote() == b.ledger.bits_remote());
  CHECK(a.ledger.bits_store() == b.ledger.bits_store());
  CHECK(a.ledger.registered_slot_us() == b.ledger.registered_slot_us());
  CHECK(a.ledger.busy_slot_us() == b.ledger.busy_slot_us());
  CHECK(a.ledger.peak_queue_len() == b.ledger.peak_queue_len());
  CHECK(a.ledger.peak_nodes() == b.ledger.peak_nodes());

  REQUIRE(a.ledger.samples().size() == b.ledger.samples().size());
  for (std::size_t i = 0; i < a.ledger.samples().size(); ++i) {
    const auto& sa = a.ledger.samples()[i];
    const auto& sb = b.ledger.samples()[i];
    CHECK(sa.time_us == sb.time_us);
    CHECK(sa.local_bps == sb.local_bps);
    CHECK(sa.remote_bps == sb.remote_bps);
    CHECK(sa.gpfs_bps == sb.gpfs_bps);
    CHECK(sa.queue_len == sb.queue_len);
    CHECK(sa.nodes == sb.nodes);
  }
  REQUIRE(a.ledger.task_records().size() == b.ledger.task_records().size());
  for (std::size_t i = 0; i < a.ledger.task_records().size(); ++i) {
    const auto& ta = a.ledger.task_records()[i];
    const auto& tb = b.ledger.task_records()[i];
    CHECK(ta.id == tb.id);
    CHECK(ta.wq_us == tb.wq_us);
    CHECK(ta.e_us == tb.e_us);
    CHECK(ta.d_us == tb.d_us);
  }
}

TEST_CASE("larger caches pull less from the store") {
  const std::string base =
      "workload.file_count = 2000\n"
      "workload.file_size_bits = 8000000\n"
      "workload.task_count = 6000\n"
      "workload.compute_us = 10000\n"
      "workload.initial_rate_per_s = 10\n"
      "workload.max_rate_per_s = 100\n"
      "workload.growth_factor = 1.5\n"
      "workload.interval_us = 10000000\n"
      "scheduler.policy = good-cache-compute\n"
      "scheduler.max_replication = 2\n"
      "node.bandwidth_bps = 1000000000\n"
      "provisioner.min_nodes = 8\n"
      "provisioner.max_nodes = 8\n"
      "provisioner.disabled = true\n"
      "engine.seed = 3\n";
  Bits prev = 0;
  bool first = true;
  std::uint64_t smallest_cache_store = 0, largest_cache_store = 0;
  for (const char* cache : {"1000000000", "2000000000", "4000000000"}) {
    auto c = config_from(base + "node.cache_bits = " + cache + "\n");
    auto res = sim::Engine(c).run();
    CHECK(res.ledger.completed_tasks() == 6000);

    // Every access is classified exactly once.
    std::uint64_t accesses = res.ledger.hits_local() +
                             res.ledger.hits_remote() +
                             res.ledger.hits_store();
    CHECK(accesses == 6000);

    if (first) smallest_cache_store = res.ledger.bits_store();
    largest_cache_store = res.ledger.bits_store();
    if (!first) CHECK(res.ledger.bits_store() <= prev);
    prev = res.ledger.bits_store();
    first = false;
  }
  CHECK(largest_cache_store < smallest_cache_store);
}

TEST_CASE("the stall guard trips on an overloaded farm") {
  auto c = config_from(
      "workload.file_count = 0\n"
      "workload.task_count = 100\n"
      "workload.compute_us = 1000000\n"
      "workload.initial_rate_per_s = 100\n"
      "workload.max_rate_per_s = 100\n"
      "scheduler.policy = first-available\n"
      "node.cpu_slots = 1\n"
      "provisioner.min_nodes = 1\n"
      "provisioner.max_nodes = 1\n"
      "provisioner.disabled = true\n"
      "engine.max_time_factor = 1.0\n");
  CHECK_THROWS_AS(sim::Engine(c).run(), sim::StallError);
}

TEST_CASE("a time guard below the ideal time is rejected outright") {
  auto c = config_from("engine.max_time_factor = 0.5\n");
  CHECK_THROWS_AS(sim::Engine{c}, std::invalid_argument);
}
