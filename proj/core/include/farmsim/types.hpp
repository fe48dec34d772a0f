#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace farmsim {

// Durations are integer microseconds and sizes integer bits throughout, so
// event ordering never depends on floating-point rounding.
using Micros = std::uint64_t;
using Bits = std::uint64_t;
using Bps = std::uint64_t;

using ObjectId = std::int32_t;
using TaskId = std::int32_t;
using NodeId = std::int32_t;

constexpr NodeId kNoNode = -1;
constexpr Micros kMicrosPerSecond = 1'000'000;

/// A file in the dataset. The authoritative copy always lives on the
/// persistent store; transient locations are tracked by the scheduler index.
struct DataObject {
  ObjectId id = 0;
  Bits size_bits = 0;
};

/// Shared file system serving the authoritative dataset.
struct PersistentStoreSpec {
  Bps ideal_bandwidth_bps = 4'400'000'000ull;
  Micros transfer_latency_us = 0;  // fixed per-transfer setup cost
};

/// A worker node: local cache plus CPU slots behind one NIC.
struct TransientStoreSpec {
  Bits capacity_bits = 0;
  Bps ideal_bandwidth_bps = 1'600'000'000ull;
  int cpu_slots = 2;
  double compute_speed = 1.0;  // multiplier on task compute time
};

/// One task: required objects, compute time, dispatch overhead.
struct TaskSpec {
  TaskId id = 0;
  Micros arrival_us = 0;
  std::vector<ObjectId> required_objects;  // empty for no-I/O tasks
  Micros compute_us = 0;
  Micros overhead_us = 0;
};

/// Constant-rate summary of a workload, used by the analytical model.
struct WorkloadSummary {
  std::uint64_t task_count = 0;
  double avg_exec_us = 0.0;            // B: compute only
  double avg_exec_with_overhead_us = 0.0;  // Y: compute plus dispatch and data
  double arrival_rate_per_s = 0.0;     // A
  int executor_count = 0;              // CPU slots available
  Bits working_set_bits = 0;
};

inline std::string node_name(NodeId id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "n%04d", id);
  return buf;
}

/// splitmix64 finalizer; decorrelates per-purpose RNG sub-streams from one
/// run seed so adding a consumer never shifts another's draws.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace farmsim
