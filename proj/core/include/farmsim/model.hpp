#pragma once

#include "farmsim/types.hpp"

namespace farmsim::model {

/// Bandwidth available to one transfer at a store under processor sharing:
/// the full ideal rate when idle, a fair share of it under load.
Bps available_bandwidth(Bps ideal_bps, std::uint32_t load_count);

/// Time to copy an object end to end, limited by the slower endpoint.
/// Rounded up to the next whole microsecond. Throws std::invalid_argument
/// ("no-path") if either bandwidth is zero.
Micros copy_time(Bits size_bits, Bps src_avail_bps, Bps dst_avail_bps,
                 Micros fixed_latency_us = 0);

/// Per-task cost: dispatch overhead plus compute, plus the copy when the
/// data is not already local.
Micros cost_per_task(const TaskSpec& task, bool cached, Micros copy_us = 0);

/// Computational intensity I = B * A. I = 1 keeps executors exactly busy,
/// I > 1 means arrivals outpace service, I < 1 leaves idle capacity.
double computational_intensity(double avg_exec_us, double arrival_rate_per_s);

/// Workload execution time: max(B/|T|, 1/A) * |K|, in microseconds.
/// Pass the overhead-inclusive average to obtain the W variant.
double workload_execution_time(double avg_exec_us, int executor_count,
                               double arrival_rate_per_s,
                               std::uint64_t task_count);

/// Efficiency E = V/W in piecewise form: 1 when Y/|T| <= 1/A, otherwise
/// max(B/Y, |T|/(A*Y)), clamped to 1.
double efficiency(double avg_exec_us, double avg_exec_with_overhead_us,
                  int executor_count, double arrival_rate_per_s);

/// Speedup S = E * |T|.
double speedup(double efficiency_fraction, int executor_count);

/// True when the aggregate transient capacity can hold the working set.
bool check_working_set_claim(Bits aggregate_transient_capacity_bits,
                             Bits working_set_bits);

}  // namespace farmsim::model
