#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "farmsim/metrics.hpp"
#include "farmsim/workload.hpp"

using namespace farmsim;
using metrics::AccessClass;
using metrics::Ledger;
using metrics::TaskRecord;

TEST_CASE("hit rates are fractions of all accesses") {
  auto r = metrics::hit_rates(78, 1, 21);
  CHECK(r.local == doctest::Approx(0.78));
  CHECK(r.remote == doctest::Approx(0.01));
  CHECK(r.store == doctest::Approx(0.21));

  auto cold = metrics::hit_rates(0, 0, 5);
  CHECK(cold.local == doctest::Approx(0.0));
  CHECK(cold.store == doctest::Approx(1.0));

  CHECK_THROWS_WITH_AS(metrics::hit_rates(0, 0, 0), "no-accesses",
                       std::invalid_argument);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    std::uint64_t a = rng() % 1000, b = rng() % 1000, c = 1 + rng() % 1000;
    auto h = metrics::hit_rates(a, b, c);
    CHECK(h.local + h.remote + h.store == doctest::Approx(1.0));
  }
}

TEST_CASE("speedup is the baseline-to-run time ratio") {
  CHECK(metrics::speedup_vs_baseline(5011e6, 1436e6) ==
        doctest::Approx(5011.0 / 1436.0));
  CHECK(metrics::speedup_vs_baseline(5011.0, 3762.0) ==
        doctest::Approx(5011.0 / 3762.0));
  CHECK(metrics::speedup_vs_baseline(1436.0, 1436.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(metrics::speedup_vs_baseline(0.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(metrics::speedup_vs_baseline(1.0, -2.0),
                  std::invalid_argument);
}

TEST_CASE("performance index normalizes against the best run") {
  auto two = metrics::performance_index({{3.5, 17.0}, {3.5, 24.0}});
  REQUIRE(two.size() == 2);
  CHECK(two[0] == doctest::Approx(1.0));
  CHECK(two[1] == doctest::Approx(17.0 / 24.0));

  auto three = metrics::performance_index(
      {{3.5, 17.0}, {3.5, 24.0}, {3.5, 46.0}});
  CHECK(three[2] == doctest::Approx(17.0 / 46.0));

  auto one = metrics::performance_index({{2.0, 9.0}});
  REQUIRE(one.size() == 1);
  CHECK(one[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(metrics::performance_index({}), std::invalid_argument);
  CHECK_THROWS_AS(metrics::performance_index({{1.0, 0.0}}),
                  std::invalid_argument);
}

TEST_CASE("slowdown compares against the ideal execution time") {
  CHECK(metrics::slowdown(5011.0, 1415.0) == doctest::Approx(5011.0 / 1415.0));
  CHECK(metrics::slowdown(1436.0, 1415.0) == doctest::Approx(1436.0 / 1415.0));
  CHECK_THROWS_AS(metrics::slowdown(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("average response time sums the three task phases") {
  TaskRecord t;
  t.wq_us = 1'000'000;
  t.e_us = 2'000'000;
  t.d_us = 100'000;
  CHECK(metrics::average_response_time_us({t}) == doctest::Approx(3.1e6));

  TaskRecord u;
  u.wq_us = 500'000;
  u.e_us = 500'000;
  u.d_us = 0;
  CHECK(metrics::average_response_time_us({t, u}) ==
        doctest::Approx((3.1e6 + 1.0e6) / 2.0));

  CHECK_THROWS_AS(metrics::average_response_time_us({}),
                  std::invalid_argument);
}

TEST_CASE("model error is symmetric relative deviation in percent") {
  CHECK(metrics::model_error_percent(100.0, 100.0) == doctest::Approx(0.0));
  CHECK(metrics::model_error_percent(105.0, 100.0) == doctest::Approx(5.0));
  CHECK(metrics::model_error_percent(95.0, 100.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(metrics::model_error_percent(1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("percentile uses nearest rank without interpolation") {
  std::vector<double> v;
  for (int i = 100; i >= 1; --i) v.push_back(i);  // unsorted on purpose
  CHECK(metrics::percentile(v, 0.5) == doctest::Approx(50.0));
  CHECK(metrics::percentile(v, 0.99) == doctest::Approx(99.0));
  CHECK(metrics::percentile(v, 1.0) == doctest::Approx(100.0));
  CHECK(metrics::percentile(v, 0.0) == doctest::Approx(1.0));
  CHECK(metrics::percentile({42.0}, 0.37) == doctest::Approx(42.0));
  CHECK(metrics::percentile({}, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("the ledger integrates slot time piecewise") {
  Ledger led(60 * kMicrosPerSecond);
  led.set_total_slots(4);
  led.advance_to(10);
  CHECK(led.registered_slot_us() == 40);
  CHECK(led.busy_slot_us() == 0);

  led.set_busy_slots(2);
  led.advance_to(30);
  CHECK(led.registered_slot_us() == 120);
  CHECK(led.busy_slot_us() == 40);
  CHECK(led.backlogged_slot_us() == 0);

  led.set_queue_len(5);
  led.advance_to(40);
  CHECK(led.registered_slot_us() == 160);
  CHECK(led.busy_slot_us() == 60);
  CHECK(led.backlogged_slot_us() == 40);
  CHECK(led.backlogged_busy_slot_us() == 20);

  // Draining the queue stops the backlogged integrals only.
  led.set_queue_len(0);
  led.advance_to(50);
  CHECK(led.backlogged_slot_us() == 40);
  CHECK(led.registered_slot_us() == 200);

  // Time never runs backwards; a stale advance is a no-op.
  led.advance_to(10);
  CHECK(led.registered_slot_us() == 200);

  CHECK(led.peak_queue_len() == 5);
}

TEST_CASE("access and byte counters accumulate by class") {
  Ledger led;
  led.record_access(AccessClass::Local);
  led.record_access(AccessClass::Local);
  led.record_access(AccessClass::Remote);
  led.record_access(AccessClass::Store);
  led.record_bits(AccessClass::Local, 100);
  led.record_bits(AccessClass::Remote, 200);
  led.record_bits(AccessClass::Store, 300);
  led.record_bits(AccessClass::Store, 50);
  CHECK(led.hits_local() == 2);
  CHECK(led.hits_remote() == 1);
  CHECK(led.hits_store() == 1);
  CHECK(led.bits_local() == 100);
  CHECK(led.bits_remote() == 200);
  CHECK(led.bits_store() == 350);
}

TEST_CASE("samples convert the bucket to rates and reset it") {
  Ledger led(2 * kMicrosPerSecond);
  led.record_bits(AccessClass::Local, 100);
  led.record_bits(AccessClass::Store, 50);
  led.take_sample(2'000'000, 123, 3, 2, 0.5, 7);

  REQUIRE(led.samples().size() == 1);
  const auto& s = led.samples().back();
  CHECK(s.time_us == 2'000'000);
  CHECK(s.local_bps == 50);  // 100 bits over 2 seconds
  CHECK(s.remote_bps == 0);
  CHECK(s.gpfs_bps == 25);
  CHECK(s.ideal_bps == 123);
  CHECK(s.queue_len == 7);
  CHECK(s.nodes == 3);
  CHECK(s.busy_nodes == 2);
  CHECK(s.cpu_util == doctest::Approx(0.5));

  // The next bucket starts where the last sample was taken.
  led.record_bits(AccessClass::Remote, 300);
  led.take_sample(4'000'000, 0, 3, 0, 0.0, 0);
  const auto& s2 = led.samples().back();
  CHECK(s2.local_bps == 0);
  CHECK(s2.remote_bps == 150);
  CHECK(led.peak_nodes() == 3);
}

TEST_CASE("task records land in their arrival interval") {
  workload::WorkloadSpec spec;
  spec.task_count = 30;
  spec.initial_rate_per_s = 1;
  spec.max_rate_per_s = 2;
  spec.growth_factor = 2.0;
  spec.interval_us = 10'000'000;
  auto schedule = workload::build_schedule(spec);
  REQUIRE(schedule.intervals.size() == 2);

  Ledger led;
  led.set_intervals(schedule, 500'000);
  REQUIRE(led.interval_stats().size() == 2);
  CHECK(led.interval_stats()[0].ideal_end_us == 10'500'000);

  TaskRecord a;
  a.id = 0;
  a.arrival_us = 5'000'000;
  led.record_task(a, 6'000'000);

  TaskRecord b;
  b.id = 1;
  b.arrival_us = 15'000'000;
  led.record_task(b, 26'000'000);
  led.record_task(b, 19'000'000);  // earlier completion does not regress

  CHECK(led.interval_stats()[0].completed == 1);
  CHECK(led.interval_stats()[0].last_completion_us == 6'000'000);
  CHECK(led.interval_stats()[1].completed == 2);
  CHECK(led.interval_stats()[1].last_completion_us == 26'000'000);
  CHECK(led.completed_tasks() == 3);
}

TEST_CASE("finalize closes the integrals at the finish time") {
  Ledger led;
  led.set_total_slots(2);
  led.set_busy_slots(1);
  led.finalize(1'000'000);
  CHECK(led.wet_us() == 1'000'000);
  CHECK(led.registered_slot_us() == 2'000'000);
  CHECK(led.busy_slot_us() == 1'000'000);
}

TEST_CASE("the report derives every summary field from the ledger") {
  Ledger led;
  led.set_total_slots(2);
  led.set_busy_slots(1);
  led.record_access(AccessClass::Local);
  led.record_access(AccessClass::Local);
  led.record_access(AccessClass::Local);
  led.record_access(AccessClass::Store);
  led.record_bits(AccessClass::Local, 3000);
  led.record_bits(AccessClass::Store, 1000);
  TaskRecord t;
  t.id = 0;
  t.wq_us = 10;
  t.e_us = 20;
  t.d_us = 30;
  led.record_task(t, 60);
  led.finalize(1'000'000'000);

  auto r = metrics::build_report(led, 500'000'000, "max-compute-util",
                                 990e6, 2000e6);
  CHECK(r.policy == "max-compute-util");
  CHECK(r.completed_tasks == 1);
  CHECK(r.wet_us == 1'000'000'000);
  CHECK(r.slowdown == doctest::Approx(2.0));
  CHECK(r.rates.local == doctest::Approx(0.75));
  CHECK(r.rates.store == doctest::Approx(0.25));
  CHECK(r.hits_local == 3);
  CHECK(r.bits_store == 1000);
  CHECK(r.avg_throughput_bps == doctest::Approx(4.0));  // 4000 bits / 1000 s
  CHECK(r.peak_throughput_bps == doctest::Approx(0.0));  // no samples taken
  CHECK(r.cpu_time_hours == doctest::Approx(2e9 / 3.6e9));
  CHECK(r.cpu_util_mean == doctest::Approx(0.5));
  CHECK(r.cpu_util_backlogged == doctest::Approx(0.0));
  CHECK(r.speedup == doctest::Approx(2.0));
  CHECK(r.avg_response_us == doctest::Approx(60.0));
  CHECK(r.avg_wq_us == doctest::Approx(10.0));
  CHECK(r.avg_e_us == doctest::Approx(20.0));
  CHECK(r.avg_d_us == doctest::Approx(30.0));
  CHECK(r.model_wet_us == doctest::Approx(990e6));
  CHECK(r.model_error_percent == doctest::Approx(10.0 / 990.0 * 100.0));
  CHECK(r.peak_queue_len == 0);
}

TEST_CASE("csv writers emit one header and one row per record") {
  Ledger led;
  led.record_bits(AccessClass::Local, 100);
  led.take_sample(1'000'000, 10, 1, 1, 1.0, 0);
  TaskRecord t;
  t.id = 3;
  t.arrival_us = 5;
  t.wq_us = 7;
  t.e_us = 9;
  t.d_us = 11;
  led.record_task(t, 32);
  led.finalize(2'000'000);
  auto report = metrics::build_report(led, 1'000'000, "first-available",
                                      0.0, 0.0);

  auto first_lines = [](const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
  };

  metrics::write_series_csv("series_smoke.tmp", led);
  auto series = first_lines("series_smoke.tmp");
  REQUIRE(series.size() == 2);
  CHECK(series[0] ==
        "time_us,throughput_local_bps,throughput_remote_bps,"
        "throughput_gpfs_bps,ideal_bps,queue_len,nodes,busy,cpu_util");
  CHECK(series[1].substr(0, 8) == "1000000,");

  metrics::write_tasks_csv("tasks_smoke.tmp", led);
  auto tasks = first_lines("tasks_smoke.tmp");
  REQUIRE(tasks.size() == 2);
  CHECK(tasks[0] == "task_id,arrival_us,wq_us,e_us,d_us");
  CHECK(tasks[1] == "3,5,7,9,11");

  metrics::write_summary_csv("summary_smoke.tmp", report);
  auto summary = first_lines("summary_smoke.tmp");
  REQUIRE(summary.size() == 2);
  CHECK(summary[1].substr(0, 18) == "first-available,1,");

  std::remove("series_smoke.tmp");
  std::remove("tasks_smoke.tmp");
  std::remove("summary_smoke.tmp");
}
