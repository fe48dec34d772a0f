#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "farmsim/types.hpp"

namespace farmsim::sched {

enum class DispatchPolicy {
  FirstAvailable,
  FirstCacheAvailable,
  MaxCacheHit,
  MaxComputeUtil,
  GoodCacheCompute,
};

const char* to_string(DispatchPolicy policy);
bool parse_policy(const std::string& name, DispatchPolicy& out);

enum class ExecState { Free, Pending, Busy };

struct SchedulerConfig {
  DispatchPolicy policy = DispatchPolicy::GoodCacheCompute;
  int window_multiplier = 100;  // W = multiplier x registered executors
  int batch_size = 1;           // m
  double cpu_threshold = 0.8;   // good-cache-compute switch point
  int max_replication = 4;      // distinct cached copies per object
};

struct HitCount {
  int local_hits = 0;
  int misses = 0;
};

/// Central dispatcher: wait queue, file/executor indices, and the two-part
/// scheduling algorithm. Single-owner object driven by the simulation loop;
/// no internal locking.
class Scheduler {
 public:
  Scheduler(const SchedulerConfig& config, const std::vector<TaskSpec>* tasks);

  // -- executor pool ---------------------------------------------------
  void register_executor(NodeId id, int cpu_slots);
  /// Removes the executor and purges it from every index entry.
  void deregister_executor(NodeId id);
  bool is_registered(NodeId id) const;
  ExecState executor_state(NodeId id) const;
  int registered_count() const { return static_cast<int>(executors_.size()); }
  int free_count() const;
  /// Busy CPU slots over registered CPU slots; the utilization signal for
  /// good-cache-compute and the metrics samples.
  double cpu_utilization() const;
  int total_slots() const { return total_slots_; }
  int busy_slots() const { return busy_slots_; }
  /// Suspends/resumes eligibility for notification (pickup backoff).
  void set_suspended(NodeId id, bool suspended);

  // -- wait queue ------------------------------------------------------
  void enqueue(TaskId id);
  std::size_t queue_length() const {
    return wait_queue_.size() + (parked_task_ != -1 ? 1 : 0);
  }
  std::size_t window_size() const;

  // -- part one: candidate notification --------------------------------
  /// Examines the head task, ranks executors caching its files by
  /// (count desc, id asc), and notifies the first free one; falls back to
  /// the next free executor in rotation. Marks the executor pending and
  /// parks the head task. Returns kNoNode when no executor is free or the
  /// queue is empty.
  NodeId notify_candidate();

  // -- part two: task pickup -------------------------------------------
  /// Scans at most min(queue, W) tasks: 100%-local-hit tasks are taken
  /// eagerly, then partial hits by descending hit rate, up to m. With no
  /// hits at all the policy decides: take the top m (max-compute-util and
  /// the first-* policies), or return nothing and go back to the free pool
  /// (max-cache-hit, unless an object has no cached copy anywhere, which
  /// makes the miss unavoidable and the task dispatchable).
  /// Good-cache-compute picks between those per cpu_utilization().
  /// Selected tasks leave the queue; an unselected parked task returns to
  /// the queue head. Clears the executor's pending state.
  std::vector<TaskId> select_tasks_for_pickup(NodeId executor);

  // -- slot occupancy (engine-driven) -----------------------------------
  void on_tasks_assigned(NodeId id, int count);
  void on_task_finished(NodeId id);

  // -- data index -------------------------------------------------------
  void on_index_update(NodeId id, const std::vector<ObjectId>& added,
                       const std::vector<ObjectId>& evicted);
  /// Executors holding (or fetching) the object, ascending id.
  std::vector<NodeId> holders(ObjectId object) const;
  std::size_t holder_count(ObjectId object) const;
  bool node_has(NodeId id, ObjectId object) const;

  // -- hit classification ----------------------------------------------
  HitCount classify_hit(TaskId task, NodeId executor) const;
  /// Hits counted against the union of all registered caches.
  HitCount classify_hit_any(TaskId task) const;
  /// Hits counted against the union of free executors' caches only.
  HitCount classify_hit_free(TaskId task) const;

  const SchedulerConfig& config() const { return config_; }

 private:
  struct ExecutorInfo {
    int cpu_slots = 0;
    int busy_slots = 0;
    bool pending = false;
    bool suspended = false;
    std::unordered_set<ObjectId> cached;  // membership tests only
  };

  const TaskSpec& task(TaskId id) const { return (*tasks_)[id]; }
  bool is_free(const ExecutorInfo& e) const {
    return !e.pending && !e.suspended && e.busy_slots < e.cpu_slots;
  }
  NodeId next_free_in_rotation();
  /// True when no transient copy of any required object exists, so a miss
  /// cannot be avoided by waiting for a better executor.
  bool unavoidable_miss(TaskId id) const;

  SchedulerConfig config_;
  const std::vector<TaskSpec>* tasks_;
  std::deque<TaskId> wait_queue_;
  TaskId parked_task_ = -1;
  NodeId parked_executor_ = kNoNode;
  std::map<NodeId, ExecutorInfo> executors_;
  std::map<ObjectId, std::set<NodeId>> file_index_;  // I_map
  NodeId rotation_cursor_ = kNoNode;
  int total_slots_ = 0;
  int busy_slots_ = 0;
};

}  // namespace farmsim::sched
