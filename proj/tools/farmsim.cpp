#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "farmsim/config.hpp"
#include "farmsim/runner.hpp"
#include "farmsim/simengine.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStalled = 3;

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  std::string seed;  // string so "unset" is distinguishable
};

void add_common(CLI::App* cmd, CommonArgs* args, bool with_out) {
  cmd->add_option("--config", args->config_path,
                  "Flat key = value config file");
  cmd->add_option("--preset", args->preset, "Bundled preset name");
  cmd->add_option("--seed", args->seed, "Override engine.seed");
  if (with_out)
    cmd->add_option("--out", args->out_dir, "Output directory")
        ->capture_default_str();
}

// Builds the effective config: preset flag first, then the file (whose own
// preset line, if any, stays the bottom layer), then the seed override.
farmsim::sim::SimConfig resolve_config(const CommonArgs& args,
                                       farmsim::cfg::KeyValues* kv_out) {
  farmsim::cfg::KeyValues kv;
  if (!args.config_path.empty())
    kv = farmsim::cfg::KeyValues::from_file(args.config_path);
  farmsim::sim::SimConfig config;
  if (!args.preset.empty()) {
    if (!farmsim::cfg::apply_preset(config, args.preset)) {
      std::string names;
      for (const auto& n : farmsim::cfg::preset_names()) names += " " + n;
      throw farmsim::cfg::ConfigError("unknown preset '" + args.preset +
                                      "'; available:" + names);
    }
  }
  if (kv_out) {
    // Sweep axes are pulled out by the caller before the overlay.
    *kv_out = kv;
    return config;
  }
  for (const auto& [k, v] : kv.values) farmsim::cfg::apply_key(config, k, v);
  if (!args.seed.empty()) farmsim::cfg::apply_key(config, "engine.seed", args.seed);
  return config;
}

int cmd_run(const CommonArgs& args, bool decision_trace,
            bool provision_trace) {
  farmsim::sim::SimConfig config = resolve_config(args, nullptr);
  farmsim::run::RunOptions opt;
  opt.out_dir = args.out_dir;
  opt.decision_trace = decision_trace;
  opt.provision_trace = provision_trace;
  farmsim::metrics::RunReport report = farmsim::run::run_one(config, opt);
  std::cout << farmsim::run::human_summary(report);
  std::cout << "reports written to " << args.out_dir << "/\n";
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args, int jobs) {
  farmsim::cfg::KeyValues kv;
  farmsim::sim::SimConfig base = resolve_config(args, &kv);
  auto axes = farmsim::run::extract_sweep_axes(kv);
  for (const auto& [k, v] : kv.values) farmsim::cfg::apply_key(base, k, v);
  if (!args.seed.empty())
    farmsim::cfg::apply_key(base, "engine.seed", args.seed);

  auto cells = farmsim::run::run_sweep(base, axes, args.out_dir, jobs);
  int failed = 0;
  for (const auto& cell : cells) {
    if (cell.ok) {
      std::printf("%-48s wet=%10.3fs speedup=%6.3f pi=%6.3f\n",
                  cell.label.c_str(), cell.report.wet_us / 1e6,
                  cell.report.speedup, cell.report.performance_index);
    } else {
      std::printf("%-48s FAILED: %s\n", cell.label.c_str(),
                  cell.error.c_str());
      ++failed;
    }
  }
  std::cout << "comparison table: " << args.out_dir << "/sweep.csv\n";
  return failed == 0 ? kExitOk : kExitStalled;
}

int cmd_model(const CommonArgs& args) {
  farmsim::sim::SimConfig config = resolve_config(args, nullptr);
  farmsim::run::ModelReport r = farmsim::run::model_report(config);
  std::printf("V = %.6g bits\n", r.volume_bits);
  std::printf("W = %.6g s\n", r.wet_us / 1e6);
  std::printf("Y = %.6g s\n", r.exec_us / 1e6);
  std::printf("E = %.3f\n", r.efficiency);
  std::printf("S = %.3f\n", r.speedup);
  std::printf("miss rate = %.4f\n", r.miss_rate);
  return kExitOk;
}

int cmd_bench(std::uint64_t tasks, std::uint64_t seed) {
  auto results = farmsim::run::bench_scheduler(tasks, seed);
  std::printf("%-24s %12s %10s %14s\n", "policy", "decisions", "seconds",
              "decisions/s");
  for (const auto& r : results)
    std::printf("%-24s %12llu %10.3f %14.0f\n", r.policy.c_str(),
                static_cast<unsigned long long>(r.decisions), r.seconds,
                r.per_second);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"farmsim: data-diffusion task farm simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, model_args;
  bool decision_trace = false, provision_trace = false;
  int jobs = 1;
  std::uint64_t bench_tasks = 250'000;
  std::uint64_t bench_seed = 1;

  CLI::App* run = app.add_subcommand("run", "Simulate one config");
  add_common(run, &run_args, true);
  run->add_flag("--decision-trace", decision_trace,
                "Write per-dispatch decisions.tsv");
  run->add_flag("--provision-trace", provision_trace,
                "Write per-tick provisioning.csv");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run the cartesian product of sweep.* axes");
  add_common(sweep, &sweep_args, true);
  sweep->add_option("--jobs", jobs, "Parallel cells")->capture_default_str();

  CLI::App* model =
      app.add_subcommand("model", "Print the analytic prediction");
  add_common(model, &model_args, false);

  CLI::App* bench = app.add_subcommand(
      "bench-scheduler", "Measure raw dispatch decisions per second");
  bench->add_option("--tasks", bench_tasks, "Decision count")
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "Workload seed")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_args, decision_trace, provision_trace);
    if (sweep->parsed()) return cmd_sweep(sweep_args, jobs);
    if (model->parsed()) return cmd_model(model_args);
    if (bench->parsed()) return cmd_bench(bench_tasks, bench_seed);
  } catch (const farmsim::sim::StallError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStalled;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
