#include "farmsim/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace farmsim::model {

Bps available_bandwidth(Bps ideal_bps, std::uint32_t load_count) {
  if (load_count <= 1) return ideal_bps;
  return ideal_bps / load_count;
}

Micros copy_time(Bits size_bits, Bps src_avail_bps, Bps dst_avail_bps,
                 Micros fixed_latency_us) {
  if (src_avail_bps == 0 || dst_avail_bps == 0) {
    throw std::invalid_argument("copy_time: no-path (zero bandwidth)");
  }
  Bps bottleneck = std::min(src_avail_bps, dst_avail_bps);
  // ceil(size * 1e6 / bottleneck) without overflow: sizes can reach 1e12+ bits.
  unsigned __int128 num =
      static_cast<unsigned __int128>(size_bits) * kMicrosPerSecond;
  unsigned __int128 us = (num + bottleneck - 1) / bottleneck;
  return static_cast<Micros>(us) + fixed_latency_us;
}

Micros cost_per_task(const TaskSpec& task, bool cached, Micros copy_us) {
  Micros cost = task.overhead_us + task.compute_us;
  if (!cached) cost += copy_us;
  return cost;
}

double computational_intensity(double avg_exec_us, double arrival_rate_per_s) {
  return (avg_exec_us / kMicrosPerSecond) * arrival_rate_per_s;
}

double workload_execution_time(double avg_exec_us, int executor_count,
                               double arrival_rate_per_s,
                               std::uint64_t task_count) {
  double per_task_us = std::max(avg_exec_us / executor_count,
                                kMicrosPerSecond / arrival_rate_per_s);
  return per_task_us * static_cast<double>(task_count);
}

double efficiency(double avg_exec_us, double avg_exec_with_overhead_us,
                  int executor_count, double arrival_rate_per_s) {
  double y = avg_exec_with_overhead_us;
  double inter_arrival_us = kMicrosPerSecond / arrival_rate_per_s;
  if (y / executor_count <= inter_arrival_us) return 1.0;
  double e = std::max(avg_exec_us / y,
                      executor_count / (arrival_rate_per_s * y / kMicrosPerSecond));
  return std::min(e, 1.0);
}

double speedup(double efficiency_fraction, int executor_count) {
  return efficiency_fraction * executor_count;
}

bool check_working_set_claim(Bits aggregate_transient_capacity_bits,
                             Bits working_set_bits) {
  return aggregate_transient_capacity_bits >= working_set_bits;
}

}  // namespace farmsim::model
