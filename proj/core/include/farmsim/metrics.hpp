#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "farmsim/types.hpp"
#include "farmsim/workload.hpp"

namespace farmsim::metrics {

enum class AccessClass { Local, Remote, Store };

struct TaskRecord {
  TaskId id = 0;
  Micros arrival_us = 0;
  Micros wq_us = 0;  // arrival -> dispatch
  Micros e_us = 0;   // dispatch overhead + compute
  Micros d_us = 0;   // waiting on data
};

struct Sample {
  Micros time_us = 0;
  Bps local_bps = 0;
  Bps remote_bps = 0;
  Bps gpfs_bps = 0;
  Bps ideal_bps = 0;
  std::size_t queue_len = 0;
  int nodes = 0;
  int busy_nodes = 0;
  double cpu_util = 0.0;
};

struct IntervalStat {
  int index = 0;
  std::uint32_t rate_per_s = 0;
  Micros start_us = 0;
  Micros ideal_end_us = 0;  // interval end + one compute time
  std::uint64_t tasks = 0;
  std::uint64_t completed = 0;
  Micros last_completion_us = 0;
};

/// Event-sourced accumulator for one simulation run: hit counters, byte
/// flows by source class, exact busy/registered slot-time integrals, the
/// sampled time series, and per-task response records.
class Ledger {
 public:
  explicit Ledger(Micros sample_interval_us = 60 * kMicrosPerSecond);

  void set_intervals(const workload::ArrivalSchedule& schedule,
                     Micros compute_us);

  // Continuous state. advance_to accrues integrals at the current rates and
  // must be called before any of the setters changes them.
  void advance_to(Micros now_us);
  void set_busy_slots(int busy);
  void set_total_slots(int total);
  void set_queue_len(std::size_t len);

  void record_access(AccessClass cls);
  void record_bits(AccessClass cls, Bits bits);
  void record_task(const TaskRecord& record, Micros completion_us);
  void take_sample(Micros now_us, Bps ideal_bps, int registered_nodes,
                   int busy_nodes, double cpu_util, std::size_t queue_len);
  void finalize(Micros wet_us);

  // Counters and aggregates.
  std::uint64_t hits_local() const { return hits_local_; }
  std::uint64_t hits_remote() const { return hits_remote_; }
  std::uint64_t hits_store() const { return hits_store_; }
  Bits bits_local() const { return bits_local_; }
  Bits bits_remote() const { return bits_remote_; }
  Bits bits_store() const { return bits_store_; }
  std::uint64_t completed_tasks() const { return task_records_.size(); }
  Micros wet_us() const { return wet_us_; }
  std::size_t peak_queue_len() const { return peak_queue_; }
  int peak_nodes() const { return peak_nodes_; }

  /// Registered slot-time (CPU_T): every provisioned slot charges from
  /// registration to deregistration or run end, busy or not.
  std::uint64_t registered_slot_us() const { return registered_slot_us_; }
  std::uint64_t busy_slot_us() const { return busy_slot_us_; }
  /// Same integrals restricted to periods with a non-empty wait queue, so
  /// utilization can be judged while there was work to do.
  std::uint64_t backlogged_slot_us() const { return backlogged_slot_us_; }
  std::uint64_t backlogged_busy_slot_us() const {
    return backlogged_busy_slot_us_;
  }

  const std::vector<Sample>& samples() const { return samples_; }
  const std::vector<TaskRecord>& task_records() const { return task_records_; }
  const std::vector<IntervalStat>& interval_stats() const {
    return intervals_;
  }
  Micros sample_interval_us() const { return sample_interval_us_; }

 private:
  Micros sample_interval_us_;
  Micros last_advance_us_ = 0;
  int busy_slots_ = 0;
  int total_slots_ = 0;
  std::size_t queue_len_ = 0;
  std::size_t peak_queue_ = 0;
  int peak_nodes_ = 0;
  std::uint64_t hits_local_ = 0, hits_remote_ = 0, hits_store_ = 0;
  Bits bits_local_ = 0, bits_remote_ = 0, bits_store_ = 0;
  Bits bucket_local_ = 0, bucket_remote_ = 0, bucket_gpfs_ = 0;
  Micros bucket_start_us_ = 0;
  std::uint64_t registered_slot_us_ = 0, busy_slot_us_ = 0;
  std::uint64_t backlogged_slot_us_ = 0, backlogged_busy_slot_us_ = 0;
  Micros wet_us_ = 0;
  std::vector<Sample> samples_;
  std::vector<TaskRecord> task_records_;
  std::vector<IntervalStat> intervals_;
};

struct HitRates {
  double local = 0.0;
  double remote = 0.0;
  double store = 0.0;
};

/// HR_L, HR_C, HR_S as fractions of all file accesses.
/// Throws std::invalid_argument("no-accesses") when the total is zero.
HitRates hit_rates(std::uint64_t local, std::uint64_t remote,
                   std::uint64_t store);

/// SP = WET_baseline / WET.
double speedup_vs_baseline(double wet_baseline_us, double wet_us);

/// PI = SP / CPU-hours, normalized so the best run in the set scores 1.
std::vector<double> performance_index(
    const std::vector<std::pair<double, double>>& sp_and_cpu_hours);

/// SL = WET / WET_ideal.
double slowdown(double wet_us, double ideal_wet_us);

/// Mean of WQ + E + D over completed tasks.
double average_response_time_us(const std::vector<TaskRecord>& records);

/// |sim - analytic| / analytic, in percent.
double model_error_percent(double sim_wet_us, double analytic_wet_us);

/// Interpolation-free percentile (nearest-rank) over a copy of the data.
double percentile(std::vector<double> values, double p);

/// Everything the summary row reports for one run.
struct RunReport {
  std::string policy;
  std::uint64_t completed_tasks = 0;
  Micros wet_us = 0;
  Micros ideal_wet_us = 0;
  double slowdown = 0.0;
  HitRates rates;
  std::uint64_t hits_local = 0, hits_remote = 0, hits_store = 0;
  Bits bits_local = 0, bits_remote = 0, bits_store = 0;
  double avg_throughput_bps = 0.0;
  double peak_throughput_bps = 0.0;  // 99th percentile of sampled totals
  double cpu_time_hours = 0.0;
  double cpu_util_mean = 0.0;
  double cpu_util_backlogged = 0.0;
  double speedup = 1.0;            // vs configured baseline, self if none
  double performance_index = 1.0;  // normalized within the comparison set
  double avg_response_us = 0.0;
  double avg_wq_us = 0.0;
  double avg_e_us = 0.0;
  double avg_d_us = 0.0;
  double model_wet_us = 0.0;
  double model_error_percent = 0.0;
  std::size_t peak_queue_len = 0;
  int peak_nodes = 0;
};

RunReport build_report(const Ledger& ledger, Micros ideal_wet_us,
                       const std::string& policy, double model_wet_us,
                       double baseline_wet_us);

void write_series_csv(const std::string& path, const Ledger& ledger);
void write_tasks_csv(const std::string& path, const Ledger& ledger);
void write_summary_csv(const std::string& path, const RunReport& report);
void write_intervals_csv(const std::string& path, const Ledger& ledger);

}  // namespace farmsim::metrics
