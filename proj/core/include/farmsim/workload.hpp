#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "farmsim/types.hpp"

namespace farmsim::workload {

enum class Selection { Uniform, Zipf, Trace };

/// Task-stream definition: an exponential-ramp arrival schedule over a fixed
/// dataset, with a pluggable file-selection distribution.
struct WorkloadSpec {
  std::uint64_t file_count = 10'000;
  Bits file_size_bits = 80'000'000;  // 10 MB
  std::uint64_t task_count = 250'000;
  Micros compute_us = 10'000;
  Micros overhead_us = 2'000;
  std::uint32_t initial_rate_per_s = 1;
  double growth_factor = 1.3;
  Micros interval_us = 60 * kMicrosPerSecond;
  std::uint32_t max_rate_per_s = 1'000;
  Selection selection = Selection::Uniform;
  double zipf_s = 1.0;
  std::string trace_path;
  bool poisson_arrivals = false;
  std::uint64_t seed = 0;
};

struct Interval {
  int index = 0;
  std::uint32_t rate_per_s = 0;
  Micros start_us = 0;
  Micros end_us = 0;
  std::uint64_t task_count = 0;
};

struct ArrivalSchedule {
  std::vector<Interval> intervals;
  Micros total_span_us = 0;  // arrival time of the last task
  std::uint64_t task_count = 0;
};

/// Expands the rate recurrence A_i = min(ceil(A_{i-1} * growth), max) into
/// intervals, truncating the final interval at the task budget.
/// Throws std::invalid_argument on specs yielding zero tasks.
ArrivalSchedule build_schedule(const WorkloadSpec& spec);

/// Infinite-resource, zero-communication execution time: the last arrival
/// plus one task's compute time.
Micros ideal_execution_time(const ArrivalSchedule& schedule, Micros compute_us);

/// Delivery rate needed to keep pace with arrivals at time t.
Bps ideal_throughput(const ArrivalSchedule& schedule, Bits file_size_bits,
                     Micros t_us);

/// Materializes the task stream: arrival times from the schedule (or the
/// trace file), one required object per task drawn from the configured
/// distribution. Deterministic under the spec seed.
std::vector<TaskSpec> build_tasks(const ArrivalSchedule& schedule,
                                  const WorkloadSpec& spec);

/// Total size of the distinct objects the spec can touch.
Bits working_set_bits(const WorkloadSpec& spec);

}  // namespace farmsim::workload
