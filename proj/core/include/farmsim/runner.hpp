#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "farmsim/config.hpp"
#include "farmsim/metrics.hpp"
#include "farmsim/simengine.hpp"

namespace farmsim::run {

/// Closed-form prediction for one config, no simulation involved.
struct ModelReport {
  double volume_bits = 0.0;   // V: total bits the workload demands
  double exec_us = 0.0;       // Y: average task wall time incl. overhead
  double wet_us = 0.0;        // W: predicted workload execution time
  double ideal_wet_us = 0.0;
  double efficiency = 0.0;    // E: ideal over predicted
  double speedup = 1.0;       // S: vs first-available on the same workload
  double miss_rate = 0.0;     // modeled fraction of accesses leaving the node
};

ModelReport model_report(const sim::SimConfig& config);

struct RunOptions {
  std::string out_dir;  // empty: in-memory only, no files written
  bool decision_trace = false;
  bool provision_trace = false;
  double baseline_wet_us = 0.0;  // reference for speedup; 0 compares to self
};

/// Runs one simulation; writes config echo, series/tasks/summary/intervals
/// CSVs and a human-readable summary under out_dir when given.
metrics::RunReport run_one(const sim::SimConfig& config,
                           const RunOptions& options);

std::string human_summary(const metrics::RunReport& report);

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

struct SweepCell {
  std::string label;
  std::string dir;
  std::map<std::string, std::string> settings;
  bool ok = false;
  std::string error;
  metrics::RunReport report;
};

/// Extracts `sweep.<key> = v1,v2,...` entries from kv, removing them.
std::vector<SweepAxis> extract_sweep_axes(cfg::KeyValues& kv);

/// Cartesian product of the axes over the base config; cells run in
/// parallel up to `jobs` threads. Speedup within the set is taken against
/// the slowest completed cell and PI is normalized across the set. A failed
/// cell keeps its error and does not abort the others.
std::vector<SweepCell> run_sweep(const sim::SimConfig& base,
                                 const std::vector<SweepAxis>& axes,
                                 const std::string& out_dir, int jobs);

void write_sweep_table(const std::string& path,
                       const std::vector<SweepCell>& cells);

struct BenchResult {
  std::string policy;
  std::uint64_t decisions = 0;
  double seconds = 0.0;
  double per_second = 0.0;
};

/// Replays the dispatch decision loop by itself: 32 executors, 10K 1-byte
/// files spread round-robin, `task_count` single-file tasks, window 3200.
std::vector<BenchResult> bench_scheduler(std::uint64_t task_count,
                                         std::uint64_t seed);

}  // namespace farmsim::run
