// End-to-end reproduction gate. Each check prints one verdict line; the
// process exit code is the number of failed checks. Heavy preset runs are
// cached so criteria that compare runs do not repeat them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "farmsim/cache.hpp"
#include "farmsim/config.hpp"
#include "farmsim/metrics.hpp"
#include "farmsim/runner.hpp"
#include "farmsim/simengine.hpp"
#include "farmsim/workload.hpp"

using namespace farmsim;

namespace {

int g_failures = 0;
std::vector<std::pair<int, std::string>> g_lines;  // (criterion, line)

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

void check(int criterion, const std::string& name, bool ok,
           const std::string& detail) {
  std::string line =
      std::string(ok ? "[PASS] " : "[FAIL] ") + name + ": " + detail;
  g_lines.emplace_back(criterion, line);
  if (!ok) ++g_failures;
  std::fprintf(stderr, "%s\n", line.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PresetRun {
  metrics::RunReport report;
  std::vector<metrics::Sample> samples;
  std::uint64_t task_count = 0;
  Bps store_bw = 0;
};

PresetRun& preset_run(const std::string& name) {
  static std::map<std::string, PresetRun> cache;
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;

  sim::SimConfig c;
  if (!cfg::apply_preset(c, name))
    throw std::runtime_error("unknown preset " + name);
  std::fprintf(stderr, "[run] %s (%llu tasks)...\n", name.c_str(),
               static_cast<unsigned long long>(c.workload.task_count));
  auto t0 = std::chrono::steady_clock::now();
  auto res = sim::Engine(c).run();

  PresetRun pr;
  pr.report = metrics::build_report(res.ledger, res.ideal_wet_us,
                                    sched::to_string(c.scheduler.policy), 0.0,
                                    0.0);
  pr.samples = res.ledger.samples();
  pr.task_count = c.workload.task_count;
  pr.store_bw = c.store.ideal_bandwidth_bps;
  std::fprintf(stderr, "[run] %s done: wet=%.2f s, wall=%.1f s\n",
               name.c_str(), static_cast<double>(pr.report.wet_us) / 1e6,
               seconds_since(t0));
  return cache.emplace(name, std::move(pr)).first->second;
}

void ac1_workload() {
  auto t0 = std::chrono::steady_clock::now();
  workload::WorkloadSpec spec;  // defaults are the ramped 250K workload
  auto schedule = workload::build_schedule(spec);
  auto tasks = workload::build_tasks(schedule, spec);
  double gen_s = seconds_since(t0);

  bool ramp_ok = schedule.intervals.size() == 24;
  for (std::uint32_t want : {59u, 101u, 132u, 380u}) {
    bool found = false;
    for (const auto& iv : schedule.intervals)
      if (iv.rate_per_s == want) found = true;
    ramp_ok = ramp_ok && found;
  }
  for (const auto& iv : schedule.intervals)
    ramp_ok = ramp_ok && iv.rate_per_s <= 1000;
  ramp_ok = ramp_ok && schedule.intervals.back().rate_per_s == 1000;
  check(1, "AC-1 arrival ramp", ramp_ok,
        strf("%zu intervals, rates x1.3 capped at %u/s",
             schedule.intervals.size(), schedule.intervals.back().rate_per_s));

  long long span_err =
      std::llabs(static_cast<long long>(schedule.total_span_us) -
                 1'414'900'000ll);
  check(1, "AC-1 task count and span",
        tasks.size() == 250'000 && span_err <= 100'000,
        strf("%zu tasks, span %.3f s (err %lld us, tol 100000)", tasks.size(),
             static_cast<double>(schedule.total_span_us) / 1e6, span_err));

  check(1, "AC-1 generation time", gen_s < 1.0,
        strf("%.3f s to generate 250K tasks (< 1 s)", gen_s));
}

void ac7_analytic_model() {
  struct Cell {
    int nodes;
    std::uint32_t rate;
    Micros mu;
    Micros oh;
    std::uint64_t tasks;
  };
  // Contention-free farms spanning arrival-limited and capacity-limited
  // regimes; zero-I/O tasks so the prediction has no stochastic input.
  const Cell cells[] = {
      {2, 10, 5'000, 0, 2'000},      {2, 10, 5'000, 2'000, 2'000},
      {2, 50, 5'000, 0, 5'000},      {4, 20, 10'000, 2'000, 3'000},
      {4, 100, 5'000, 0, 5'000},     {8, 50, 10'000, 2'000, 5'000},
      {8, 200, 5'000, 0, 10'000},    {16, 100, 10'000, 2'000, 10'000},
      {16, 500, 5'000, 0, 20'000},   {32, 200, 10'000, 2'000, 20'000},
      {32, 1000, 5'000, 0, 50'000},  {64, 500, 10'000, 2'000, 50'000},
      {2, 200, 50'000, 2'000, 2'000}, {4, 500, 50'000, 0, 5'000},
      {8, 1000, 50'000, 2'000, 10'000}, {16, 1000, 50'000, 0, 10'000},
      {32, 1000, 50'000, 2'000, 20'000}, {2, 1000, 10'000, 0, 5'000},
      {4, 1000, 20'000, 2'000, 5'000}, {8, 500, 20'000, 0, 10'000},
  };

  double worst_err = 0.0;
  long long worst_exact_diff = 0;
  int exact_cells = 0;
  for (const Cell& cell : cells) {
    sim::SimConfig c;
    c.workload.file_count = 0;
    c.workload.file_size_bits = 0;
    c.workload.task_count = cell.tasks;
    c.workload.compute_us = cell.mu;
    c.workload.overhead_us = cell.oh;
    c.workload.initial_rate_per_s = cell.rate;
    c.workload.max_rate_per_s = cell.rate;
    c.scheduler.policy = sched::DispatchPolicy::FirstAvailable;
    c.node.cpu_slots = 2;
    c.node.cache_bits = 0;
    c.provisioner.min_nodes = cell.nodes;
    c.provisioner.max_nodes = cell.nodes;
    c.provisioner.disabled = true;
    c.dispatch_rate_cap_per_s = 1e6;

    auto res = sim::Engine(c).run();
    double model = run::model_report(c).wet_us;
    double err =
        std::fabs(static_cast<double>(res.wet_us) - model) / model * 100.0;
    worst_err = std::max(worst_err, err);

    // With per-task service fitting inside one slot's share of the arrival
    // period, the farm is arrival-limited and the prediction is exact.
    bool arrival_limited =
        (cell.mu + cell.oh) * cell.rate <=
        1'000'000ull * 2 * static_cast<unsigned>(cell.nodes);
    if (arrival_limited) {
      ++exact_cells;
      long long diff = std::llabs(static_cast<long long>(res.wet_us) -
                                  static_cast<long long>(std::llround(model)));
      worst_exact_diff = std::max(worst_exact_diff, diff);
    }
  }
  check(7, "AC-7 analytic agreement", worst_err <= 1.0,
        strf("max |sim-model| error %.4f%% over %zu farms (<= 1%%)", worst_err,
             std::size(cells)));
  check(7, "AC-7 arrival-limited exactness", worst_exact_diff <= 1,
        strf("max |sim-model| %lld us over %d arrival-limited farms (<= 1)",
             worst_exact_diff, exact_cells));
}

void ac8_decision_rate() {
  std::fprintf(stderr, "[run] scheduler decision benchmark (250K tasks)...\n");
  auto bench = run::bench_scheduler(250'000, 1);
  double fa = 0.0, best_other = 0.0, min_aware = 1e18;
  std::string slowest;
  for (const auto& b : bench) {
    if (b.policy == "first-available") {
      fa = b.per_second;
    } else {
      if (b.per_second > best_other) best_other = b.per_second;
      if (b.per_second < min_aware) {
        min_aware = b.per_second;
        slowest = b.policy;
      }
    }
  }
  check(8, "AC-8 data-aware decision rate", min_aware >= 1000.0,
        strf("slowest data-aware policy (%s) %.0f decisions/s (>= 1000)",
             slowest.c_str(), min_aware));
  check(8, "AC-8 trivial policy fastest", fa > best_other,
        strf("first-available %.0f/s vs best data-aware %.0f/s", fa,
             best_other));
}

void ac9_determinism_and_invariants() {
  auto t0 = std::chrono::steady_clock::now();

  sim::SimConfig c;
  cfg::apply_preset(c, "gcc-4gb");
  c.workload.task_count = 2'000;
  c.seed = 5;

  auto write_out = [](const sim::SimResult& res, const std::string& tag) {
    auto report = metrics::build_report(res.ledger, res.ideal_wet_us,
                                        "good-cache-compute", 0.0, 0.0);
    metrics::write_series_csv("acc9_" + tag + "_series.csv", res.ledger);
    metrics::write_tasks_csv("acc9_" + tag + "_tasks.csv", res.ledger);
    metrics::write_summary_csv("acc9_" + tag + "_summary.csv", report);
  };
  auto ra = sim::Engine(c).run();
  write_out(ra, "a");
  auto rb = sim::Engine(c).run();
  write_out(rb, "b");

  bool identical = true;
  for (const char* kind : {"series", "tasks", "summary"}) {
    std::string a = slurp(std::string("acc9_a_") + kind + ".csv");
    std::string b = slurp(std::string("acc9_b_") + kind + ".csv");
    identical = identical && !a.empty() && a == b;
  }
  for (const char* f :
       {"acc9_a_series.csv", "acc9_a_tasks.csv", "acc9_a_summary.csv",
        "acc9_b_series.csv", "acc9_b_tasks.csv", "acc9_b_summary.csv"})
    std::remove(f);
  check(9, "AC-9 repeatability", identical,
        "two seeded runs emit byte-identical series/tasks/summary reports");
  check(9, "AC-9 small-run conservation",
        ra.ledger.completed_tasks() == 2'000,
        strf("%llu of 2000 tasks completed",
             static_cast<unsigned long long>(ra.ledger.completed_tasks())));

  // Cache capacity invariant under randomized churn, every policy.
  bool cap_ok = true;
  int ops = 0;
  for (auto policy : {cache::EvictionPolicy::Lru, cache::EvictionPolicy::Fifo,
                      cache::EvictionPolicy::Lfu,
                      cache::EvictionPolicy::Random}) {
    cache::NodeCache nc(1'000, policy, 9);
    std::mt19937_64 rng(11);
    std::vector<ObjectId> pinned;
    for (int i = 0; i < 600; ++i, ++ops) {
      ObjectId id = static_cast<ObjectId>(rng() % 50);
      switch (rng() % 4) {
        case 0:
        case 1:
          nc.insert(id, 50 + rng() % 350);
          break;
        case 2:
          if (nc.lookup(id)) {
            nc.pin(id);
            pinned.push_back(id);
          }
          break;
        case 3:
          if (!pinned.empty()) {
            nc.unpin(pinned.back());
            pinned.pop_back();
          }
          break;
      }
      cap_ok = cap_ok && nc.used_bits() <= nc.capacity_bits();
    }
  }
  check(9, "AC-9 cache capacity invariant", cap_ok,
        strf("used <= capacity after each of %d randomized ops, 4 policies",
             ops));

  check(9, "AC-9 invariant-block wall time", seconds_since(t0) < 60.0,
        strf("%.1f s (< 60 s)", seconds_since(t0)));
}

void ac2_baseline() {
  const auto& base = preset_run("baseline-gpfs");
  check(2, "AC-2 baseline wet",
        base.report.wet_us >= 4'509'900'000 &&
            base.report.wet_us <= 5'512'100'000,
        strf("wet=%.2f s (5011 s +/- 10%%)",
             static_cast<double>(base.report.wet_us) / 1e6));

  double worst = 2.0;
  int ramp_n = 0;
  for (const auto& s : base.samples) {
    if (s.ideal_bps == 0 || s.ideal_bps > 3'600'000'000ull) continue;
    ++ramp_n;
    worst = std::min(worst, static_cast<double>(s.gpfs_bps) /
                                static_cast<double>(s.ideal_bps));
  }
  check(2, "AC-2 ramp tracking", ramp_n > 0 && worst >= 0.85,
        strf("min store/ideal throughput ratio %.3f over %d ramp samples "
             "(>= 0.85)",
             worst, ramp_n));

  int plat_n = 0;
  double lo = 1e18, hi = 0.0;
  for (const auto& s : base.samples) {
    if (s.queue_len < 5'000) continue;
    ++plat_n;
    lo = std::min(lo, static_cast<double>(s.gpfs_bps));
    hi = std::max(hi, static_cast<double>(s.gpfs_bps));
  }
  check(2, "AC-2 plateau saturation",
        plat_n >= 1 && lo >= 4.18e9 && hi <= 4.62e9,
        strf("backlogged store throughput in [%.2f, %.2f] Gb/s over %d "
             "samples (4.4 +/- 5%%)",
             lo / 1e9, hi / 1e9, plat_n));
}

void ac3_hot_capacity() {
  const auto& run = preset_run("gcc-2gb");
  check(3, "AC-3 hot-capacity wet",
        run.report.wet_us >= 1'292'400'000 &&
            run.report.wet_us <= 1'579'600'000,
        strf("wet=%.2f s (1436 s +/- 10%%)",
             static_cast<double>(run.report.wet_us) / 1e6));
  check(3, "AC-3 hot-capacity locality", run.report.rates.local >= 0.95,
        strf("local hit rate %.4f (>= 0.95)", run.report.rates.local));
  check(3, "AC-3 hot-capacity backlog", run.report.peak_queue_len <= 15'000,
        strf("peak queue %zu (<= 15000)", run.report.peak_queue_len));
}

void ac4_thrashing() {
  const auto& thrash = preset_run("gcc-1gb");
  const auto& hot = preset_run("gcc-2gb");
  const auto& base = preset_run("baseline-gpfs");

  check(4, "AC-4 thrashing locality",
        thrash.report.rates.local > 0.0 && thrash.report.rates.local < 0.64,
        strf("local hit rate %.4f (in (0, 0.64))", thrash.report.rates.local));

  Bits total = thrash.report.bits_local + thrash.report.bits_remote +
               thrash.report.bits_store;
  double store_frac = total > 0
                          ? static_cast<double>(thrash.report.bits_store) /
                                static_cast<double>(total)
                          : 0.0;
  check(4, "AC-4 thrashing store traffic", store_frac > 0.30,
        strf("store carries %.4f of all bits (> 0.30)", store_frac));

  check(4, "AC-4 thrashing wet ordering",
        thrash.report.wet_us > hot.report.wet_us &&
            thrash.report.wet_us < base.report.wet_us,
        strf("wet %.2f s between hot %.2f s and baseline %.2f s",
             static_cast<double>(thrash.report.wet_us) / 1e6,
             static_cast<double>(hot.report.wet_us) / 1e6,
             static_cast<double>(base.report.wet_us) / 1e6));
}

void ac5_policy_comparison() {
  const auto& gcc = preset_run("gcc-4gb");
  const auto& mcu = preset_run("mcu-4gb");
  const auto& mch = preset_run("mch-4gb");
  const auto& fa = preset_run("fa-4gb");

  check(5, "AC-5 policy ordering",
        gcc.report.wet_us < mcu.report.wet_us &&
            mcu.report.wet_us < mch.report.wet_us &&
            mch.report.wet_us < fa.report.wet_us,
        strf("wet gcc %.1f < mcu %.1f < mch %.1f < fa %.1f (s)",
             static_cast<double>(gcc.report.wet_us) / 1e6,
             static_cast<double>(mcu.report.wet_us) / 1e6,
             static_cast<double>(mch.report.wet_us) / 1e6,
             static_cast<double>(fa.report.wet_us) / 1e6));

  check(5, "AC-5 cache-first starves cpus",
        mch.report.cpu_util_mean < 0.6,
        strf("max-cache-hit mean cpu utilization %.3f (< 0.6)",
             mch.report.cpu_util_mean));

  check(5, "AC-5 compute-first keeps cpus busy",
        mcu.report.cpu_util_backlogged >= 0.90 &&
            mcu.report.cpu_util_backlogged > mch.report.cpu_util_backlogged,
        strf("max-compute-util backlogged utilization %.3f (>= 0.90, vs "
             "max-cache-hit %.3f)",
             mcu.report.cpu_util_backlogged,
             mch.report.cpu_util_backlogged));

  check(5, "AC-5 cache-first avoids the store",
        mch.report.rates.local + mch.report.rates.remote >= 0.90,
        strf("max-cache-hit local+remote hit rate %.4f (>= 0.90)",
             mch.report.rates.local + mch.report.rates.remote));
}

void ac6_provisioning() {
  auto pi = metrics::performance_index({{3.5, 17.0}, {3.5, 24.0}});
  bool pi_ok = pi.size() == 2 && std::fabs(pi[0] - 1.0) <= 1e-9 &&
               std::fabs(pi[1] - 17.0 / 24.0) <= 1e-9;
  check(6, "AC-6 performance index", pi_ok,
        strf("equal-speedup pair scores {%.6f, %.6f} (expect {1, 17/24})",
             pi.empty() ? 0.0 : pi[0], pi.size() < 2 ? 0.0 : pi[1]));

  const auto& dynamic = preset_run("gcc-4gb");
  const auto& fixed = preset_run("static-gcc-4gb");
  check(6, "AC-6 demand provisioning saves cpu time",
        dynamic.report.cpu_time_hours < fixed.report.cpu_time_hours,
        strf("dynamic pool %.2f cpu-hours vs static farm %.2f",
             dynamic.report.cpu_time_hours, fixed.report.cpu_time_hours));
}

void ac9_cross_run_invariants() {
  const char* names[] = {"baseline-gpfs", "fa-4gb",  "gcc-4gb",
                         "mcu-4gb",       "mch-4gb", "gcc-2gb",
                         "gcc-1gb",       "static-gcc-4gb"};
  bool conserved = true, feasible = true, rates_sum = true;
  double worst_feas = 0.0;
  std::string detail;
  for (const char* name : names) {
    const auto& pr = preset_run(name);
    if (pr.report.completed_tasks != pr.task_count) {
      conserved = false;
      detail += strf(" %s=%llu", name,
                     static_cast<unsigned long long>(
                         pr.report.completed_tasks));
    }
    for (const auto& s : pr.samples) {
      double ratio = static_cast<double>(s.gpfs_bps) /
                     static_cast<double>(pr.store_bw);
      worst_feas = std::max(worst_feas, ratio);
      if (ratio > 1.05) feasible = false;
    }
    double sum = pr.report.rates.local + pr.report.rates.remote +
                 pr.report.rates.store;
    if (std::fabs(sum - 1.0) > 1e-9) rates_sum = false;
  }
  check(9, "AC-9 task conservation", conserved,
        conserved ? "every preset run completed all 250000 tasks"
                  : "lost tasks:" + detail);
  check(9, "AC-9 store feasibility", feasible,
        strf("max sampled store throughput %.3fx capacity across 8 runs "
             "(<= 1.05x)",
             worst_feas));
  check(9, "AC-9 hit-rate closure", rates_sum,
        "local+remote+store rates sum to 1 within 1e-9 on all runs");
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  ac1_workload();
  ac7_analytic_model();
  ac8_decision_rate();
  ac9_determinism_and_invariants();
  ac2_baseline();
  ac3_hot_capacity();
  ac4_thrashing();
  ac5_policy_comparison();
  ac6_provisioning();
  ac9_cross_run_invariants();

  std::stable_sort(g_lines.begin(), g_lines.end(),
                   [](const auto& a, const auto& b) {
                     return a.first < b.first;
                   });
  for (const auto& [criterion, line] : g_lines) std::puts(line.c_str());
  std::printf("acceptance: %zu checks, %d failed, %.1f s total\n",
              g_lines.size(), g_failures, seconds_since(t0));
  return g_failures;
}
