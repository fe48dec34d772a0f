#include "farmsim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "farmsim/model.hpp"

namespace fs = std::filesystem;

namespace farmsim::run {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace

ModelReport model_report(const sim::SimConfig& c) {
  const auto& w = c.workload;
  int nodes = c.provisioner.disabled ? c.provisioner.min_nodes
                                     : c.provisioner.max_nodes;
  nodes = std::max(1, nodes);
  const int slots = nodes * c.node.cpu_slots;
  const double beta = static_cast<double>(w.file_size_bits);
  const double objs = w.file_count > 0 ? 1.0 : 0.0;

  // Transfer time for one miss when every slot is pulling at once: the
  // per-slot share of the store, unless the node NIC is the bottleneck.
  double path_bps =
      std::min(static_cast<double>(c.store.ideal_bandwidth_bps) / slots,
               static_cast<double>(c.node.bandwidth_bps) / c.node.cpu_slots);
  double zeta_us =
      objs > 0 ? beta * 1e6 / path_bps +
                     static_cast<double>(c.store.transfer_latency_us)
               : 0.0;

  const bool caching =
      c.scheduler.policy != sched::DispatchPolicy::FirstAvailable &&
      c.node.cache_bits > 0 && c.scheduler.max_replication >= 1;
  double miss = 0.0;
  if (objs > 0) {
    if (!caching) {
      miss = 1.0;
    } else {
      // Every distinct file misses once cold; past that, misses only occur
      // when the aggregate transient capacity cannot hold the working set.
      double ws = static_cast<double>(workload::working_set_bits(w));
      double aggregate = static_cast<double>(c.node.cache_bits) * nodes;
      double cold = static_cast<double>(w.file_count) /
                    static_cast<double>(std::max<std::uint64_t>(1, w.task_count));
      double hit_cap = ws > 0 ? std::min(1.0, aggregate / ws) : 1.0;
      miss = std::clamp(std::max(cold, 1.0 - hit_cap), 0.0, 1.0);
    }
  }

  const double mu_eff =
      static_cast<double>(w.compute_us) / c.node.compute_speed;
  const double y = static_cast<double>(w.overhead_us) + mu_eff;

  double span_us = 0.0;
  double ideal_us = 0.0;
  std::uint64_t count = 0;
  workload::ArrivalSchedule schedule;
  std::vector<TaskSpec> trace_tasks;
  if (w.selection != workload::Selection::Trace) {
    schedule = workload::build_schedule(w);
    span_us = static_cast<double>(schedule.total_span_us);
    ideal_us = static_cast<double>(
        workload::ideal_execution_time(schedule, w.compute_us));
    count = schedule.task_count;
  } else {
    trace_tasks = workload::build_tasks(schedule, w);
    for (const auto& t : trace_tasks) {
      span_us = std::max(span_us, static_cast<double>(t.arrival_us));
      ideal_us = std::max(ideal_us,
                          static_cast<double>(t.arrival_us + t.compute_us));
    }
    count = trace_tasks.size();
  }

  auto predict = [&](double miss_rate) {
    double y_eff = y + miss_rate * objs * zeta_us;
    if (w.selection != workload::Selection::Trace) {
      double sum = 0.0;
      for (const auto& iv : schedule.intervals)
        sum += model::workload_execution_time(y_eff, slots, iv.rate_per_s,
                                              iv.task_count);
      return sum + y_eff;
    }
    double rate = span_us > 0 ? static_cast<double>(count) * 1e6 / span_us
                              : 0.0;
    double sum = rate > 0
                     ? model::workload_execution_time(y_eff, slots, rate, count)
                     : y_eff * static_cast<double>(count) / slots;
    return sum + y_eff;
  };

  ModelReport r;
  r.volume_bits = objs * static_cast<double>(count) * beta;
  r.miss_rate = miss;
  r.exec_us = y + miss * objs * zeta_us;
  r.wet_us = predict(miss);
  r.ideal_wet_us = ideal_us;
  r.efficiency = r.wet_us > 0 ? ideal_us / r.wet_us : 0.0;
  double wet_fa = objs > 0 ? predict(1.0) : r.wet_us;
  r.speedup = r.wet_us > 0 ? wet_fa / r.wet_us : 1.0;
  return r;
}

metrics::RunReport run_one(const sim::SimConfig& config,
                           const RunOptions& options) {
  sim::Engine engine(config);
  std::ofstream decisions, provisioning;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    // The echo goes out before the run so even a stalled cell is
    // re-runnable from its own directory.
    write_text_file(options.out_dir + "/config.txt",
                    cfg::echo_config(config));
    if (options.decision_trace) {
      decisions.open(options.out_dir + "/decisions.tsv");
      decisions << "time_us\ttask\texecutor\tpolicy\tlocal_hits\tmisses\n";
      engine.set_decision_trace(&decisions);
    }
    if (options.provision_trace) {
      provisioning.open(options.out_dir + "/provisioning.csv");
      provisioning << "time_us,registered,pending,queue\n";
      engine.set_provision_trace(&provisioning);
    }
  }

  sim::SimResult result = engine.run();
  ModelReport model = model_report(config);
  metrics::RunReport report = metrics::build_report(
      result.ledger, result.ideal_wet_us,
      sched::to_string(config.scheduler.policy), model.wet_us,
      options.baseline_wet_us);

  if (!options.out_dir.empty()) {
    metrics::write_series_csv(options.out_dir + "/series.csv", result.ledger);
    metrics::write_tasks_csv(options.out_dir + "/tasks.csv", result.ledger);
    metrics::write_intervals_csv(options.out_dir + "/intervals.csv",
                                 result.ledger);
    metrics::write_summary_csv(options.out_dir + "/summary.csv", report);
    write_text_file(options.out_dir + "/summary.txt", human_summary(report));
  }
  return report;
}

std::string human_summary(const metrics::RunReport& r) {
  std::ostringstream out;
  out << "policy              " << r.policy << '\n'
      << "completed tasks     " << r.completed_tasks << '\n'
      << "WET                 " << fmt("%.2f", r.wet_us / 1e6) << " s\n"
      << "ideal WET           " << fmt("%.2f", r.ideal_wet_us / 1e6) << " s\n"
      << "slowdown            " << fmt("%.4f", r.slowdown) << '\n'
      << "hit rates           local " << fmt("%.4f", r.rates.local)
      << "  remote " << fmt("%.4f", r.rates.remote) << "  store "
      << fmt("%.4f", r.rates.store) << '\n'
      << "bits by source      local " << r.bits_local << "  remote "
      << r.bits_remote << "  store " << r.bits_store << '\n'
      << "delivered Gb/s      avg " << fmt("%.3f", r.avg_throughput_bps / 1e9)
      << "  peak " << fmt("%.3f", r.peak_throughput_bps / 1e9) << '\n'
      << "CPU time            " << fmt("%.2f", r.cpu_time_hours) << " h\n"
      << "CPU utilization     " << fmt("%.3f", r.cpu_util_mean) << " ("
      << fmt("%.3f", r.cpu_util_backlogged) << " while backlogged)\n"
      << "speedup             " << fmt("%.3f", r.speedup) << '\n'
      << "performance index   " << fmt("%.3f", r.performance_index) << '\n'
      << "avg response        " << fmt("%.3f", r.avg_response_us / 1e6)
      << " s (wq " << fmt("%.3f", r.avg_wq_us / 1e6) << " s, e "
      << fmt("%.3f", r.avg_e_us / 1e6) << " s, d "
      << fmt("%.3f", r.avg_d_us / 1e6) << " s)\n"
      << "model WET           " << fmt("%.2f", r.model_wet_us / 1e6)
      << " s (error " << fmt("%.2f", r.model_error_percent) << "%)\n"
      << "peak queue          " << r.peak_queue_len << '\n'
      << "peak nodes          " << r.peak_nodes << '\n';
  return out.str();
}

std::vector<SweepAxis> extract_sweep_axes(cfg::KeyValues& kv) {
  std::vector<SweepAxis> axes;
  for (auto it = kv.values.begin(); it != kv.values.end();) {
    if (it->first.rfind("sweep.", 0) != 0) {
      ++it;
      continue;
    }
    SweepAxis axis;
    axis.key = it->first.substr(6);
    std::istringstream vs(it->second);
    std::string v;
    while (std::getline(vs, v, ',')) {
      std::size_t b = v.find_first_not_of(" \t");
      std::size_t e = v.find_last_not_of(" \t");
      if (b != std::string::npos) axis.values.push_back(v.substr(b, e - b + 1));
    }
    if (axis.key.empty() || axis.values.empty())
      throw cfg::ConfigError("sweep: axis '" + it->first + "' is empty");
    axes.push_back(std::move(axis));
    it = kv.values.erase(it);
  }
  return axes;
}

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s) {
    bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
              (ch >= '0' && ch <= '9') || ch == '.' || ch == '_' || ch == '-';
    out.push_back(ok ? ch : '-');
  }
  return out;
}

}  // namespace

std::vector<SweepCell> run_sweep(const sim::SimConfig& base,
                                 const std::vector<SweepAxis>& axes,
                                 const std::string& out_dir, int jobs) {
  if (axes.empty()) throw cfg::ConfigError("sweep: no sweep.* axes defined");

  std::vector<SweepCell> cells;
  std::vector<std::size_t> odo(axes.size(), 0);
  while (true) {
    SweepCell cell;
    std::string label;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const std::string& value = axes[a].values[odo[a]];
      cell.settings[axes[a].key] = value;
      if (!label.empty()) label += "__";
      label += sanitize(axes[a].key) + "-" + sanitize(value);
    }
    cell.label = label;
    char idx[16];
    std::snprintf(idx, sizeof(idx), "%03zu", cells.size());
    cell.dir = std::string(idx) + "-" + label;
    cells.push_back(std::move(cell));
    std::size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++odo[a] < axes[a].values.size()) break;
      odo[a] = 0;
    }
    if (a == axes.size()) break;
  }

  int workers = std::clamp<int>(jobs, 1, static_cast<int>(cells.size()));
  std::atomic<std::size_t> next{0};
  auto body = [&]() {
    for (std::size_t i = next.fetch_add(1); i < cells.size();
         i = next.fetch_add(1)) {
      SweepCell& cell = cells[i];
      std::string cell_dir =
          out_dir.empty() ? "" : out_dir + "/" + cell.dir;
      try {
        sim::SimConfig config = base;
        for (const auto& [k, v] : cell.settings) cfg::apply_key(config, k, v);
        RunOptions opt;
        opt.out_dir = cell_dir;
        cell.report = run_one(config, opt);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
        if (!cell_dir.empty()) {
          std::error_code ec;
          fs::create_directories(cell_dir, ec);
          if (!ec) write_text_file(cell_dir + "/error.txt", cell.error + "\n");
        }
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }

  // Speedup against the slowest completed cell; PI normalized across the set.
  double worst = 0.0;
  for (const auto& cell : cells)
    if (cell.ok) worst = std::max(worst, static_cast<double>(cell.report.wet_us));
  std::vector<std::pair<double, double>> sp_hours;
  for (const auto& cell : cells)
    if (cell.ok)
      sp_hours.emplace_back(metrics::speedup_vs_baseline(
                                worst, static_cast<double>(cell.report.wet_us)),
                            cell.report.cpu_time_hours);
  if (!sp_hours.empty()) {
    std::vector<double> pi = metrics::performance_index(sp_hours);
    std::size_t j = 0;
    for (auto& cell : cells) {
      if (!cell.ok) continue;
      cell.report.speedup = sp_hours[j].first;
      cell.report.performance_index = pi[j];
      ++j;
      if (!out_dir.empty()) {
        metrics::write_summary_csv(out_dir + "/" + cell.dir + "/summary.csv",
                                   cell.report);
        write_text_file(out_dir + "/" + cell.dir + "/summary.txt",
                        human_summary(cell.report));
      }
    }
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_sweep_table(out_dir + "/sweep.csv", cells);
  }
  return cells;
}

void write_sweep_table(const std::string& path,
                       const std::vector<SweepCell>& cells) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "cell,settings,status,wet_s,slowdown,hr_local,hr_remote,hr_store,"
         "speedup,performance_index,cpu_time_hours,peak_queue,error\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SweepCell& cell = cells[i];
    std::string settings;
    for (const auto& [k, v] : cell.settings) {
      if (!settings.empty()) settings += ';';
      settings += k + "=" + v;
    }
    out << i << ',' << settings << ',' << (cell.ok ? "ok" : "failed") << ',';
    if (cell.ok) {
      const auto& r = cell.report;
      out << fmt("%.3f", r.wet_us / 1e6) << ',' << fmt("%.4f", r.slowdown)
          << ',' << fmt("%.4f", r.rates.local) << ','
          << fmt("%.4f", r.rates.remote) << ',' << fmt("%.4f", r.rates.store)
          << ',' << fmt("%.4f", r.speedup) << ','
          << fmt("%.4f", r.performance_index) << ','
          << fmt("%.4f", r.cpu_time_hours) << ',' << r.peak_queue_len << ',';
    } else {
      out << ",,,,,,,,";
    }
    std::string err = cell.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << err << '\n';
  }
}

std::vector<BenchResult> bench_scheduler(std::uint64_t task_count,
                                         std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  constexpr int kNodes = 32;
  constexpr int kSlots = 2;
  constexpr ObjectId kFiles = 10000;

  std::vector<TaskSpec> tasks(task_count);
  std::mt19937_64 rng(mix_seed(seed, 7));
  std::uniform_int_distribution<ObjectId> pick(0, kFiles - 1);
  for (std::uint64_t i = 0; i < task_count; ++i) {
    tasks[i].id = static_cast<TaskId>(i);
    tasks[i].arrival_us = 0;
    tasks[i].required_objects.push_back(pick(rng));
    tasks[i].compute_us = 10'000;
    tasks[i].overhead_us = 2'000;
  }

  const sched::DispatchPolicy order[] = {
      sched::DispatchPolicy::FirstAvailable,
      sched::DispatchPolicy::FirstCacheAvailable,
      sched::DispatchPolicy::MaxCacheHit,
      sched::DispatchPolicy::MaxComputeUtil,
      sched::DispatchPolicy::GoodCacheCompute,
  };
  std::vector<BenchResult> results;
  for (sched::DispatchPolicy policy : order) {
    sched::SchedulerConfig sc;
    sc.policy = policy;
    sc.window_multiplier = 100;  // 32 executors -> window 3200
    sc.batch_size = 1;
    sched::Scheduler s(sc, &tasks);
    for (NodeId n = 0; n < kNodes; ++n) s.register_executor(n, kSlots);
    std::vector<std::vector<ObjectId>> placement(kNodes);
    for (ObjectId f = 0; f < kFiles; ++f)
      placement[f % kNodes].push_back(f);
    for (NodeId n = 0; n < kNodes; ++n)
      s.on_index_update(n, placement[n], {});
    for (std::uint64_t t = 0; t < task_count; ++t)
      s.enqueue(static_cast<TaskId>(t));

    std::uint64_t decisions = 0;
    auto t0 = clock::now();
    while (s.queue_length() > 0) {
      NodeId n = s.notify_candidate();
      if (n == kNoNode)
        throw std::logic_error("bench: no free executor during replay");
      std::vector<TaskId> picked = s.select_tasks_for_pickup(n);
      ++decisions;
      if (!picked.empty()) {
        s.on_tasks_assigned(n, static_cast<int>(picked.size()));
        for (std::size_t k = 0; k < picked.size(); ++k) s.on_task_finished(n);
      }
    }
    double secs =
        std::chrono::duration<double>(clock::now() - t0).count();
    BenchResult r;
    r.policy = sched::to_string(policy);
    r.decisions = decisions;
    r.seconds = secs;
    r.per_second = static_cast<double>(decisions) / std::max(secs, 1e-9);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace farmsim::run
