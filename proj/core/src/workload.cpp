#include "farmsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace farmsim::workload {

ArrivalSchedule build_schedule(const WorkloadSpec& spec) {
  if (spec.task_count == 0 || spec.initial_rate_per_s == 0 ||
      spec.interval_us == 0)
    throw std::invalid_argument("workload: empty schedule");
  // A non-growing ramp would silently pin the rate below max_rate forever.
  // Constant-rate schedules (initial == max) never consult the factor.
  if (spec.initial_rate_per_s < spec.max_rate_per_s &&
      spec.growth_factor <= 1.0)
    throw std::invalid_argument("workload: growth_factor must exceed 1");
  ArrivalSchedule out;
  std::uint64_t remaining = spec.task_count;
  std::uint32_t rate = spec.initial_rate_per_s;
  Micros start = 0;
  int index = 0;
  while (remaining > 0) {
    std::uint64_t full =
        static_cast<std::uint64_t>(rate) * spec.interval_us / kMicrosPerSecond;
    if (full == 0)
      throw std::invalid_argument("workload: interval shorter than one task");
    Interval iv;
    iv.index = index++;
    iv.rate_per_s = rate;
    iv.start_us = start;
    iv.task_count = std::min(full, remaining);
    // Arrival k lands at start + (k+1)/rate, so a full interval's last task
    // arrives exactly on the boundary.
    iv.end_us =
        start + iv.task_count * kMicrosPerSecond / rate;
    out.intervals.push_back(iv);
    remaining -= iv.task_count;
    start += spec.interval_us;
    if (rate < spec.max_rate_per_s) {
      double next = std::ceil(static_cast<double>(rate) * spec.growth_factor);
      rate = static_cast<std::uint32_t>(
          std::min<double>(next, spec.max_rate_per_s));
    }
  }
  out.task_count = spec.task_count;
  out.total_span_us = out.intervals.back().end_us;
  return out;
}

Micros ideal_execution_time(const ArrivalSchedule& schedule,
                            Micros compute_us) {
  return schedule.total_span_us + compute_us;
}

Bps ideal_throughput(const ArrivalSchedule& schedule, Bits file_size_bits,
                     Micros t_us) {
  for (const auto& iv : schedule.intervals) {
    if (t_us >= iv.start_us && t_us < iv.end_us)
      return static_cast<Bps>(iv.rate_per_s) * file_size_bits;
  }
  return 0;
}

namespace {

std::vector<Micros> interval_arrivals(const Interval& iv, bool poisson,
                                      std::mt19937_64& rng) {
  std::vector<Micros> out;
  out.reserve(iv.task_count);
  if (!poisson) {
    for (std::uint64_t k = 0; k < iv.task_count; ++k)
      out.push_back(iv.start_us +
                    (k + 1) * kMicrosPerSecond / iv.rate_per_s);
    return out;
  }
  // Conditioned on the count, Poisson arrival times over the interval are
  // the order statistics of uniform draws.
  Micros span = iv.end_us - iv.start_us;
  std::uniform_int_distribution<Micros> dist(1, span);
  for (std::uint64_t k = 0; k < iv.task_count; ++k)
    out.push_back(iv.start_us + dist(rng));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TaskSpec> read_trace(const WorkloadSpec& spec) {
  std::ifstream in(spec.trace_path);
  if (!in) throw std::runtime_error("workload: cannot open " + spec.trace_path);
  std::vector<TaskSpec> tasks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    TaskSpec t;
    std::uint64_t arrival = 0;
    std::int64_t file_id = 0;
    std::uint64_t compute = 0;
    if (!(ls >> arrival >> file_id >> compute))
      throw std::runtime_error("workload: bad trace line: " + line);
    t.id = static_cast<TaskId>(tasks.size());
    t.arrival_us = arrival;
    if (file_id >= 0) t.required_objects.push_back(static_cast<ObjectId>(file_id));
    t.compute_us = compute;
    t.overhead_us = spec.overhead_us;
    tasks.push_back(std::move(t));
  }
  std::stable_sort(tasks.begin(), tasks.end(),
                   [](const TaskSpec& a, const TaskSpec& b) {
                     return a.arrival_us < b.arrival_us;
                   });
  for (std::size_t i = 0; i < tasks.size(); ++i)
    tasks[i].id = static_cast<TaskId>(i);
  return tasks;
}

class ZipfSampler {
 public:
  ZipfSampler(std::uint64_t n, double s) : cdf_(n) {
    double sum = 0.0;
    for (std::uint64_t k = 1; k <= n; ++k) {
      sum += 1.0 / std::pow(static_cast<double>(k), s);
      cdf_[k - 1] = sum;
    }
    for (auto& v : cdf_) v /= sum;
  }
  ObjectId draw(std::mt19937_64& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<ObjectId>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

std::vector<TaskSpec> build_tasks(const ArrivalSchedule& schedule,
                                  const WorkloadSpec& spec) {
  if (spec.selection == Selection::Trace) return read_trace(spec);

  std::mt19937_64 arrival_rng(mix_seed(spec.seed, 1));
  std::mt19937_64 select_rng(mix_seed(spec.seed, 2));
  // file_count == 0 models a pure-compute workload: tasks carry no objects.
  std::uniform_int_distribution<std::int64_t> uniform_file(
      0, std::max<std::int64_t>(0, static_cast<std::int64_t>(spec.file_count) - 1));
  ZipfSampler zipf(
      spec.selection == Selection::Zipf && spec.file_count > 0 ? spec.file_count
                                                               : 1,
      spec.zipf_s);

  std::vector<TaskSpec> tasks;
  tasks.reserve(schedule.task_count);
  for (const auto& iv : schedule.intervals) {
    auto arrivals = interval_arrivals(iv, spec.poisson_arrivals, arrival_rng);
    for (Micros at : arrivals) {
      TaskSpec t;
      t.id = static_cast<TaskId>(tasks.size());
      t.arrival_us = at;
      if (spec.file_count > 0) {
        ObjectId obj = spec.selection == Selection::Zipf
                           ? zipf.draw(select_rng)
                           : static_cast<ObjectId>(uniform_file(select_rng));
        t.required_objects.push_back(obj);
      }
      t.compute_us = spec.compute_us;
      t.overhead_us = spec.overhead_us;
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

Bits working_set_bits(const WorkloadSpec& spec) {
  return spec.file_count * spec.file_size_bits;
}

}  // namespace farmsim::workload
