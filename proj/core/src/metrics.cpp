#include "farmsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace farmsim::metrics {

Ledger::Ledger(Micros sample_interval_us)
    : sample_interval_us_(sample_interval_us) {}

void Ledger::set_intervals(const workload::ArrivalSchedule& schedule,
                           Micros compute_us) {
  intervals_.clear();
  for (const auto& iv : schedule.intervals) {
    IntervalStat st;
    st.index = iv.index;
    st.rate_per_s = iv.rate_per_s;
    st.start_us = iv.start_us;
    st.ideal_end_us = iv.end_us + compute_us;
    st.tasks = iv.task_count;
    intervals_.push_back(st);
  }
}

void Ledger::advance_to(Micros now_us) {
  if (now_us <= last_advance_us_) return;
  Micros dt = now_us - last_advance_us_;
  registered_slot_us_ += static_cast<std::uint64_t>(total_slots_) * dt;
  busy_slot_us_ += static_cast<std::uint64_t>(busy_slots_) * dt;
  if (queue_len_ > 0) {
    backlogged_slot_us_ += static_cast<std::uint64_t>(total_slots_) * dt;
    backlogged_busy_slot_us_ += static_cast<std::uint64_t>(busy_slots_) * dt;
  }
  last_advance_us_ = now_us;
}

void Ledger::set_busy_slots(int busy) { busy_slots_ = busy; }
void Ledger::set_total_slots(int total) { total_slots_ = total; }
void Ledger::set_queue_len(std::size_t len) {
  queue_len_ = len;
  peak_queue_ = std::max(peak_queue_, len);
}

void Ledger::record_access(AccessClass cls) {
  switch (cls) {
    case AccessClass::Local: hits_local_ += 1; break;
    case AccessClass::Remote: hits_remote_ += 1; break;
    case AccessClass::Store: hits_store_ += 1; break;
  }
}

void Ledger::record_bits(AccessClass cls, Bits bits) {
  switch (cls) {
    case AccessClass::Local:
      bits_local_ += bits;
      bucket_local_ += bits;
      break;
    case AccessClass::Remote:
      bits_remote_ += bits;
      bucket_remote_ += bits;
      break;
    case AccessClass::Store:
      bits_store_ += bits;
      bucket_gpfs_ += bits;
      break;
  }
}

void Ledger::record_task(const TaskRecord& record, Micros completion_us) {
  task_records_.push_back(record);
  for (auto& iv : intervals_) {
    // Intervals are bucketed by arrival time; the final interval is
    // half-open past its nominal end so the truncated tail still lands.
    bool last = &iv == &intervals_.back();
    if (record.arrival_us >= iv.start_us &&
        (record.arrival_us <= iv.ideal_end_us || last)) {
      iv.completed += 1;
      iv.last_completion_us = std::max(iv.last_completion_us, completion_us);
      break;
    }
  }
}

void Ledger::take_sample(Micros now_us, Bps ideal_bps, int registered_nodes,
                         int busy_nodes, double cpu_util,
                         std::size_t queue_len) {
  Sample s;
  s.time_us = now_us;
  Micros span = now_us > bucket_start_us_ ? now_us - bucket_start_us_
                                          : sample_interval_us_;
  s.local_bps = bucket_local_ * kMicrosPerSecond / span;
  s.remote_bps = bucket_remote_ * kMicrosPerSecond / span;
  s.gpfs_bps = bucket_gpfs_ * kMicrosPerSecond / span;
  s.ideal_bps = ideal_bps;
  s.queue_len = queue_len;
  s.nodes = registered_nodes;
  s.busy_nodes = busy_nodes;
  s.cpu_util = cpu_util;
  peak_nodes_ = std::max(peak_nodes_, registered_nodes);
  samples_.push_back(s);
  bucket_local_ = bucket_remote_ = bucket_gpfs_ = 0;
  bucket_start_us_ = now_us;
}

void Ledger::finalize(Micros wet_us) {
  advance_to(wet_us);
  wet_us_ = wet_us;
}

HitRates hit_rates(std::uint64_t local, std::uint64_t remote,
                   std::uint64_t store) {
  std::uint64_t total = local + remote + store;
  if (total == 0) throw std::invalid_argument("no-accesses");
  HitRates r;
  r.local = static_cast<double>(local) / total;
  r.remote = static_cast<double>(remote) / total;
  r.store = static_cast<double>(store) / total;
  return r;
}

double speedup_vs_baseline(double wet_baseline_us, double wet_us) {
  if (wet_baseline_us <= 0.0 || wet_us <= 0.0)
    throw std::invalid_argument("speedup: nonpositive time");
  return wet_baseline_us / wet_us;
}

std::vector<double> performance_index(
    const std::vector<std::pair<double, double>>& sp_and_cpu_hours) {
  if (sp_and_cpu_hours.empty())
    throw std::invalid_argument("performance_index: empty set");
  std::vector<double> raw;
  raw.reserve(sp_and_cpu_hours.size());
  double best = 0.0;
  for (const auto& [sp, hours] : sp_and_cpu_hours) {
    if (hours <= 0.0)
      throw std::invalid_argument("performance_index: nonpositive cpu time");
    raw.push_back(sp / hours);
    best = std::max(best, raw.back());
  }
  for (auto& v : raw) v = best > 0.0 ? v / best : 0.0;
  return raw;
}

double slowdown(double wet_us, double ideal_wet_us) {
  if (ideal_wet_us <= 0.0) throw std::invalid_argument("slowdown: ideal <= 0");
  return wet_us / ideal_wet_us;
}

double average_response_time_us(const std::vector<TaskRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("average_response_time: no tasks");
  double sum = 0.0;
  for (const auto& r : records)
    sum += static_cast<double>(r.wq_us) + static_cast<double>(r.e_us) +
           static_cast<double>(r.d_us);
  return sum / static_cast<double>(records.size());
}

double model_error_percent(double sim_wet_us, double analytic_wet_us) {
  if (analytic_wet_us <= 0.0)
    throw std::invalid_argument("model_error: analytic <= 0");
  return std::fabs(sim_wet_us - analytic_wet_us) / analytic_wet_us * 100.0;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double rank = p * static_cast<double>(values.size());
  std::size_t idx = static_cast<std::size_t>(std::ceil(rank));
  if (idx == 0) idx = 1;
  if (idx > values.size()) idx = values.size();
  return values[idx - 1];
}

RunReport build_report(const Ledger& ledger, Micros ideal_wet_us,
                       const std::string& policy, double model_wet_us,
                       double baseline_wet_us) {
  RunReport r;
  r.policy = policy;
  r.completed_tasks = ledger.completed_tasks();
  r.wet_us = ledger.wet_us();
  r.ideal_wet_us = ideal_wet_us;
  r.slowdown = slowdown(static_cast<double>(ledger.wet_us()),
                        static_cast<double>(ideal_wet_us));
  r.hits_local = ledger.hits_local();
  r.hits_remote = ledger.hits_remote();
  r.hits_store = ledger.hits_store();
  std::uint64_t accesses =
      r.hits_local + r.hits_remote + r.hits_store;
  if (accesses > 0)
    r.rates = hit_rates(r.hits_local, r.hits_remote, r.hits_store);
  r.bits_local = ledger.bits_local();
  r.bits_remote = ledger.bits_remote();
  r.bits_store = ledger.bits_store();
  Bits total_bits = r.bits_local + r.bits_remote + r.bits_store;
  if (ledger.wet_us() > 0)
    r.avg_throughput_bps = static_cast<double>(total_bits) *
                           kMicrosPerSecond /
                           static_cast<double>(ledger.wet_us());
  std::vector<double> totals;
  totals.reserve(ledger.samples().size());
  for (const auto& s : ledger.samples())
    totals.push_back(static_cast<double>(s.local_bps) +
                     static_cast<double>(s.remote_bps) +
                     static_cast<double>(s.gpfs_bps));
  r.peak_throughput_bps = percentile(std::move(totals), 0.99);
  r.cpu_time_hours =
      static_cast<double>(ledger.registered_slot_us()) / 3.6e9;
  if (ledger.registered_slot_us() > 0)
    r.cpu_util_mean = static_cast<double>(ledger.busy_slot_us()) /
                      static_cast<double>(ledger.registered_slot_us());
  if (ledger.backlogged_slot_us() > 0)
    r.cpu_util_backlogged =
        static_cast<double>(ledger.backlogged_busy_slot_us()) /
        static_cast<double>(ledger.backlogged_slot_us());
  double base = baseline_wet_us > 0.0 ? baseline_wet_us
                                      : static_cast<double>(ledger.wet_us());
  r.speedup =
      speedup_vs_baseline(base, static_cast<double>(ledger.wet_us()));
  r.performance_index = 1.0;  // normalized by the sweep combiner
  if (!ledger.task_records().empty()) {
    r.avg_response_us = average_response_time_us(ledger.task_records());
    double wq = 0.0, e = 0.0, d = 0.0;
    for (const auto& t : ledger.task_records()) {
      wq += static_cast<double>(t.wq_us);
      e += static_cast<double>(t.e_us);
      d += static_cast<double>(t.d_us);
    }
    double n = static_cast<double>(ledger.task_records().size());
    r.avg_wq_us = wq / n;
    r.avg_e_us = e / n;
    r.avg_d_us = d / n;
  }
  r.model_wet_us = model_wet_us;
  if (model_wet_us > 0.0)
    r.model_error_percent = model_error_percent(
        static_cast<double>(ledger.wet_us()), model_wet_us);
  r.peak_queue_len = ledger.peak_queue_len();
  r.peak_nodes = ledger.peak_nodes();
  return r;
}

namespace {
std::ofstream open_or_throw(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}
}  // namespace

void write_series_csv(const std::string& path, const Ledger& ledger) {
  auto out = open_or_throw(path);
  out << "time_us,throughput_local_bps,throughput_remote_bps,"
         "throughput_gpfs_bps,ideal_bps,queue_len,nodes,busy,cpu_util\n";
  char buf[64];
  for (const auto& s : ledger.samples()) {
    std::snprintf(buf, sizeof(buf), "%.4f", s.cpu_util);
    out << s.time_us << ',' << s.local_bps << ',' << s.remote_bps << ','
        << s.gpfs_bps << ',' << s.ideal_bps << ',' << s.queue_len << ','
        << s.nodes << ',' << s.busy_nodes << ',' << buf << '\n';
  }
}

void write_tasks_csv(const std::string& path, const Ledger& ledger) {
  auto out = open_or_throw(path);
  out << "task_id,arrival_us,wq_us,e_us,d_us\n";
  for (const auto& t : ledger.task_records())
    out << t.id << ',' << t.arrival_us << ',' << t.wq_us << ',' << t.e_us
        << ',' << t.d_us << '\n';
}

void write_intervals_csv(const std::string& path, const Ledger& ledger) {
  auto out = open_or_throw(path);
  out << "interval,rate_per_s,start_us,ideal_end_us,tasks,completed,"
         "last_completion_us,slowdown\n";
  char buf[64];
  for (const auto& iv : ledger.interval_stats()) {
    double sl = 0.0;
    if (iv.last_completion_us > iv.start_us &&
        iv.ideal_end_us > iv.start_us)
      sl = static_cast<double>(iv.last_completion_us - iv.start_us) /
           static_cast<double>(iv.ideal_end_us - iv.start_us);
    std::snprintf(buf, sizeof(buf), "%.4f", sl);
    out << iv.index << ',' << iv.rate_per_s << ',' << iv.start_us << ','
        << iv.ideal_end_us << ',' << iv.tasks << ',' << iv.completed << ','
        << iv.last_completion_us << ',' << buf << '\n';
  }
}

void write_summary_csv(const std::string& path, const RunReport& r) {
  auto out = open_or_throw(path);
  out << "policy,completed_tasks,wet_us,ideal_wet_us,slowdown,"
         "hr_local,hr_remote,hr_store,hits_local,hits_remote,hits_store,"
         "bits_local,bits_remote,bits_store,avg_throughput_bps,"
         "peak_throughput_bps,cpu_time_hours,cpu_util_mean,"
         "cpu_util_backlogged,speedup,performance_index,avg_response_us,"
         "avg_wq_us,avg_e_us,avg_d_us,model_wet_us,model_error_percent,"
         "peak_queue_len,peak_nodes\n";
  auto f = [&out](double v, const char* fmt = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    out << ',' << buf;
  };
  out << r.policy << ',' << r.completed_tasks << ',' << r.wet_us << ','
      << r.ideal_wet_us;
  f(r.slowdown);
  f(r.rates.local);
  f(r.rates.remote);
  f(r.rates.store);
  out << ',' << r.hits_local << ',' << r.hits_remote << ',' << r.hits_store
      << ',' << r.bits_local << ',' << r.bits_remote << ',' << r.bits_store;
  f(r.avg_throughput_bps, "%.2f");
  f(r.peak_throughput_bps, "%.2f");
  f(r.cpu_time_hours);
  f(r.cpu_util_mean);
  f(r.cpu_util_backlogged);
  f(r.speedup);
  f(r.performance_index);
  f(r.avg_response_us, "%.2f");
  f(r.avg_wq_us, "%.2f");
  f(r.avg_e_us, "%.2f");
  f(r.avg_d_us, "%.2f");
  f(r.model_wet_us, "%.2f");
  f(r.model_error_percent, "%.4f");
  out << ',' << r.peak_queue_len << ',' << r.peak_nodes << '\n';
}

}  // namespace farmsim::metrics
