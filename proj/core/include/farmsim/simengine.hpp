#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "farmsim/cache.hpp"
#include "farmsim/metrics.hpp"
#include "farmsim/provisioner.hpp"
#include "farmsim/scheduler.hpp"
#include "farmsim/types.hpp"
#include "farmsim/workload.hpp"

namespace farmsim::sim {

struct NodeSpec {
  int cpu_slots = 2;
  Bits cache_bits = 0;
  Bps bandwidth_bps = 1'600'000'000ull;
  double compute_speed = 1.0;
};

struct SimConfig {
  workload::WorkloadSpec workload;
  sched::SchedulerConfig scheduler;
  cache::EvictionPolicy eviction = cache::EvictionPolicy::Lru;
  NodeSpec node;
  PersistentStoreSpec store;
  prov::ProvisionerConfig provisioner;
  // The dispatcher is a serial decision engine; cycles (one notify plus one
  // pickup) are spaced at least 1/rate apart, and a cycle that hands over
  // nothing still consumes a turn.
  double dispatch_rate_cap_per_s = 3000.0;
  // An executor whose pickup returned no tasks stays out of the free pool
  // for this long (models its re-poll delay). 0 disables.
  Micros empty_pickup_backoff_us = 0;
  Micros pending_timeout_us = 60'000'000;
  Micros index_staleness_us = 0;
  Micros provisioner_tick_us = 1'000'000;
  Micros sample_interval_us = 60'000'000;
  double max_time_factor = 10.0;  // stall guard: 10x ideal execution time
  std::uint64_t seed = 1;
};

class StallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimResult {
  metrics::Ledger ledger;
  Micros wet_us = 0;
  Micros ideal_wet_us = 0;
  workload::ArrivalSchedule schedule;
  /// Endpoint refreshes that validated the bandwidth-feasibility invariant
  /// (the run throws on the first violation, so a finished run held it at
  /// every one of these recalc events).
  std::uint64_t bandwidth_recalcs = 0;
};

/// Single-threaded discrete-event simulator. One instance runs one config;
/// identical config and seed reproduce identical results bit for bit.
class Engine {
 public:
  explicit Engine(const SimConfig& config);
  ~Engine();

  /// One dispatch line per task: time, task, executor, policy, hits, misses.
  void set_decision_trace(std::ostream* out) { decision_trace_ = out; }
  /// One line per provisioner tick: time, registered, pending, queue.
  void set_provision_trace(std::ostream* out) { provision_trace_ = out; }

  SimResult run();

 private:
  enum class Kind {
    Arrival,
    DispatchCycle,
    Pickup,
    TaskStart,
    TransferWake,
    TaskComplete,
    AllocationReady,
    ProvisionerTick,
    IndexUpdate,
    StatsSample,
    ExecutorResume,
  };

  struct Event {
    Micros time = 0;
    std::uint64_t seq = 0;
    Kind kind = Kind::Arrival;
    std::int64_t a = 0;
    std::int64_t b = 0;
  };
  struct EventAfter {
    bool operator()(const Event& x, const Event& y) const {
      if (x.time != y.time) return x.time > y.time;
      return x.seq > y.seq;
    }
  };

  struct Node {
    std::unique_ptr<cache::NodeCache> cache;
    std::set<int> transfers;  // ids touching this NIC, in or out
    int busy_slots = 0;
  };

  struct Transfer {
    int id = 0;
    ObjectId obj = 0;
    Bits size = 0;
    NodeId src = kNoNode;  // kNoNode: the persistent store
    NodeId dst = kNoNode;
    Bits remaining = 0;
    Bps rate = 0;
    Micros last_us = 0;
    Micros latency_left_us = 0;
    Micros done_us = 0;
    bool caches = false;
    metrics::AccessClass cls = metrics::AccessClass::Store;
    std::vector<TaskId> waiters;
  };

  struct TaskRuntime {
    NodeId node = kNoNode;
    Micros dispatch_us = 0;
    Micros data_start_us = 0;
    Micros compute_us_eff = 0;
    int outstanding = 0;
    std::vector<ObjectId> pinned;
  };

  void push_event(Micros time, Kind kind, std::int64_t a = 0,
                  std::int64_t b = 0);
  void maybe_schedule_cycle(Micros now);
  void sync_ledger_state(Micros now);

  void handle_arrival(Micros now, TaskId task);
  void handle_dispatch_cycle(Micros now);
  void handle_pickup(Micros now, NodeId node);
  void handle_task_start(Micros now, TaskId task);
  void handle_task_complete(Micros now, TaskId task);
  void handle_allocation_ready(Micros now);
  void handle_provisioner_tick(Micros now);
  void handle_stats_sample(Micros now);
  void post_index_update(Micros now, NodeId node,
                         const std::vector<ObjectId>& added,
                         const std::vector<ObjectId>& evicted);

  void register_node(NodeId id, Micros now);
  void release_node(NodeId id, Micros now);

  // Transfer fluid model.
  Bps endpoint_share(NodeId endpoint) const;
  Bps transfer_rate(const Transfer& t) const;
  void advance_transfer(Transfer& t, Micros now);
  void advance_endpoint(NodeId endpoint, Micros now);
  void refresh_endpoint(NodeId endpoint, Micros now);
  void arm_transfer_wake(Micros now);
  void handle_transfer_wake(Micros now, std::uint64_t generation);
  void complete_transfer(int tid, Micros now);
  const std::set<int>& endpoint_transfers(NodeId endpoint) const;

  void begin_data_phase(Micros now, TaskId task);
  void fetch_object(Micros now, TaskId task, ObjectId obj);
  void object_ready(Micros now, TaskId task, ObjectId obj, bool pinned);
  void start_compute(Micros now, TaskId task);

  SimConfig config_;
  std::vector<TaskSpec> tasks_;
  workload::ArrivalSchedule schedule_;
  std::unique_ptr<sched::Scheduler> scheduler_;
  std::unique_ptr<prov::Provisioner> provisioner_;
  metrics::Ledger ledger_;

  std::priority_queue<Event, std::vector<Event>, EventAfter> heap_;
  std::uint64_t next_seq_ = 0;
  std::map<NodeId, Node> nodes_;
  std::set<int> store_transfers_;
  std::unordered_map<int, Transfer> transfers_;
  std::map<std::pair<NodeId, ObjectId>, int> inflight_;
  int next_transfer_id_ = 0;
  std::uint64_t wake_generation_ = 0;
  std::uint64_t bandwidth_recalcs_ = 0;
  Micros armed_wake_us_ = 0;
  bool wake_armed_ = false;

  std::vector<TaskRuntime> runtime_;
  std::size_t next_arrival_ = 0;
  std::uint64_t completed_ = 0;
  bool done_ = false;
  Micros wet_us_ = 0;
  Micros ideal_wet_us_ = 0;
  Micros max_time_us_ = 0;
  Micros cycle_interval_us_ = 0;
  Micros last_cycle_us_ = 0;
  bool cycle_scheduled_ = false;
  bool first_cycle_ = true;
  Bits file_size_bits_ = 0;

  struct PendingIndexUpdate {
    NodeId node;
    std::vector<ObjectId> added;
    std::vector<ObjectId> evicted;
  };
  std::vector<PendingIndexUpdate> pending_updates_;

  std::ostream* decision_trace_ = nullptr;
  std::ostream* provision_trace_ = nullptr;
};

}  // namespace farmsim::sim
