#include "farmsim/scheduler.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace farmsim::sched {

const char* to_string(DispatchPolicy policy) {
  switch (policy) {
    case DispatchPolicy::FirstAvailable: return "first-available";
    case DispatchPolicy::FirstCacheAvailable: return "first-cache-available";
    case DispatchPolicy::MaxCacheHit: return "max-cache-hit";
    case DispatchPolicy::MaxComputeUtil: return "max-compute-util";
    case DispatchPolicy::GoodCacheCompute: return "good-cache-compute";
  }
  return "unknown";
}

bool parse_policy(const std::string& name, DispatchPolicy& out) {
  if (name == "first-available") out = DispatchPolicy::FirstAvailable;
  else if (name == "first-cache-available")
    out = DispatchPolicy::FirstCacheAvailable;
  else if (name == "max-cache-hit") out = DispatchPolicy::MaxCacheHit;
  else if (name == "max-compute-util") out = DispatchPolicy::MaxComputeUtil;
  else if (name == "good-cache-compute")
    out = DispatchPolicy::GoodCacheCompute;
  else return false;
  return true;
}

Scheduler::Scheduler(const SchedulerConfig& config,
                     const std::vector<TaskSpec>* tasks)
    : config_(config), tasks_(tasks) {
  if (config_.cpu_threshold <= 0.0 || config_.cpu_threshold > 1.0)
    throw std::invalid_argument("scheduler: cpu_threshold outside (0,1]");
  if (config_.batch_size < 1)
    throw std::invalid_argument("scheduler: batch_size < 1");
}

void Scheduler::register_executor(NodeId id, int cpu_slots) {
  if (executors_.count(id))
    throw std::logic_error("scheduler: executor already registered");
  ExecutorInfo info;
  info.cpu_slots = cpu_slots;
  executors_.emplace(id, std::move(info));
  total_slots_ += cpu_slots;
}

void Scheduler::deregister_executor(NodeId id) {
  auto it = executors_.find(id);
  if (it == executors_.end()) return;
  for (ObjectId obj : it->second.cached) {
    auto fi = file_index_.find(obj);
    if (fi == file_index_.end()) continue;
    fi->second.erase(id);
    if (fi->second.empty()) file_index_.erase(fi);
  }
  total_slots_ -= it->second.cpu_slots;
  busy_slots_ -= it->second.busy_slots;
  if (parked_executor_ == id) {
    wait_queue_.push_front(parked_task_);
    parked_task_ = -1;
    parked_executor_ = kNoNode;
  }
  executors_.erase(it);
}

bool Scheduler::is_registered(NodeId id) const {
  return executors_.count(id) != 0;
}

ExecState Scheduler::executor_state(NodeId id) const {
  const auto& e = executors_.at(id);
  if (e.pending) return ExecState::Pending;
  return e.busy_slots >= e.cpu_slots ? ExecState::Busy : ExecState::Free;
}

int Scheduler::free_count() const {
  int n = 0;
  for (const auto& [id, e] : executors_)
    if (is_free(e)) ++n;
  return n;
}

double Scheduler::cpu_utilization() const {
  if (total_slots_ == 0) throw std::logic_error("no-executors");
  return static_cast<double>(busy_slots_) / total_slots_;
}

void Scheduler::set_suspended(NodeId id, bool suspended) {
  executors_.at(id).suspended = suspended;
}

void Scheduler::enqueue(TaskId id) { wait_queue_.push_back(id); }

std::size_t Scheduler::window_size() const {
  int nodes = std::max(1, registered_count());
  return static_cast<std::size_t>(config_.window_multiplier) * nodes;
}

NodeId Scheduler::next_free_in_rotation() {
  if (executors_.empty()) return kNoNode;
  auto start = executors_.upper_bound(rotation_cursor_);
  for (auto it = start; it != executors_.end(); ++it) {
    if (is_free(it->second)) {
      rotation_cursor_ = it->first;
      return it->first;
    }
  }
  for (auto it = executors_.begin(); it != start; ++it) {
    if (is_free(it->second)) {
      rotation_cursor_ = it->first;
      return it->first;
    }
  }
  return kNoNode;
}

NodeId Scheduler::notify_candidate() {
  if (wait_queue_.empty() || parked_task_ != -1) return kNoNode;
  TaskId head = wait_queue_.front();
  NodeId chosen = kNoNode;

  switch (config_.policy) {
    case DispatchPolicy::FirstAvailable:
      // No index consultation by design.
      chosen = next_free_in_rotation();
      break;
    case DispatchPolicy::FirstCacheAvailable: {
      for (ObjectId obj : task(head).required_objects) {
        auto fi = file_index_.find(obj);
        if (fi == file_index_.end()) continue;
        for (NodeId holder : fi->second) {
          if (!is_free(executors_.at(holder))) continue;
          if (chosen == kNoNode || holder < chosen) chosen = holder;
        }
      }
      if (chosen == kNoNode) chosen = next_free_in_rotation();
      break;
    }
    case DispatchPolicy::MaxCacheHit: {
      // Scores span busy and free executors alike, and the head task is
      // bound to the argmax holder: if that executor is busy the task
      // waits for it instead of running on a lesser match. Only a file
      // cached nowhere falls through to the first free executor, since
      // someone has to fetch it.
      std::map<NodeId, int> counts;
      for (ObjectId obj : task(head).required_objects) {
        auto fi = file_index_.find(obj);
        if (fi == file_index_.end()) continue;
        for (NodeId holder : fi->second) counts[holder] += 1;
      }
      int best = 0;
      for (const auto& [id, count] : counts) {
        if (count > best) {
          best = count;
          chosen = id;
        }
      }
      if (chosen != kNoNode) {
        if (!is_free(executors_.at(chosen))) return kNoNode;
      } else {
        for (const auto& [id, exec] : executors_) {
          if (is_free(exec)) {
            chosen = id;
            break;
          }
        }
      }
      break;
    }
    default: {
      // Candidate counts over the head task's files, restricted to free
      // executors; ordered map keeps the min-id tie-break deterministic.
      std::map<NodeId, int> counts;
      for (ObjectId obj : task(head).required_objects) {
        auto fi = file_index_.find(obj);
        if (fi == file_index_.end()) continue;
        for (NodeId holder : fi->second) {
          if (is_free(executors_.at(holder))) counts[holder] += 1;
        }
      }
      int best = 0;
      for (const auto& [id, count] : counts) {
        if (count > best) {
          best = count;
          chosen = id;
        }
      }
      if (chosen == kNoNode) chosen = next_free_in_rotation();
      break;
    }
  }

  if (chosen == kNoNode) return kNoNode;
  executors_.at(chosen).pending = true;
  parked_task_ = head;
  parked_executor_ = chosen;
  wait_queue_.pop_front();
  return chosen;
}

bool Scheduler::unavoidable_miss(TaskId id) const {
  for (ObjectId obj : task(id).required_objects) {
    if (file_index_.count(obj)) return false;
  }
  return true;
}

std::vector<TaskId> Scheduler::select_tasks_for_pickup(NodeId executor) {
  auto& exec = executors_.at(executor);
  // A pickup can hand over at most as many tasks as the executor has idle
  // slots, whatever the configured batch size.
  const std::size_t idle =
      static_cast<std::size_t>(std::max(0, exec.cpu_slots - exec.busy_slots));
  const std::size_t m =
      std::min(static_cast<std::size_t>(config_.batch_size), idle);
  if (m == 0) {
    if (parked_task_ != -1 && parked_executor_ == executor) {
      wait_queue_.push_front(parked_task_);
      parked_task_ = -1;
      parked_executor_ = kNoNode;
    }
    exec.pending = false;
    return {};
  }

  const std::size_t cap = window_size();
  bool has_parked = parked_task_ != -1 && parked_executor_ == executor;

  if (config_.policy == DispatchPolicy::FirstAvailable) {
    // First-available inspects nothing but queue position, so the window
    // is never materialized: the parked task and then the queue head are
    // handed over directly. Selection order matches the generic path; the
    // win is a decision loop with no per-entry work at all.
    std::vector<TaskId> out;
    if (has_parked) {
      out.push_back(parked_task_);
      parked_task_ = -1;
      parked_executor_ = kNoNode;
    }
    while (out.size() < m && out.size() < cap && !wait_queue_.empty()) {
      out.push_back(wait_queue_.front());
      wait_queue_.pop_front();
    }
    exec.pending = false;
    return out;
  }

  // Inspection window: the parked head task first, then the queue prefix.
  // Entry index -1 denotes the parked task.
  struct Inspected {
    TaskId id;
    std::ptrdiff_t queue_index;
    double hit_rate;
    bool full_hit;
    bool any_hit;
  };
  std::vector<Inspected> window;
  if (has_parked) window.push_back({parked_task_, -1, 0.0, false, false});
  for (std::size_t i = 0; i < wait_queue_.size() && window.size() < cap; ++i)
    window.push_back({wait_queue_[i], static_cast<std::ptrdiff_t>(i), 0.0,
                      false, false});

  std::vector<std::size_t> selected;  // indices into window
  {
    // Eager pass: 100%-local-hit tasks in window order.
    std::size_t scanned = 0;
    for (std::size_t i = 0; i < window.size(); ++i) {
      auto& w = window[i];
      const auto& objs = task(w.id).required_objects;
      int hits = 0;
      for (ObjectId obj : objs) hits += exec.cached.count(obj) ? 1 : 0;
      w.any_hit = hits > 0;
      w.full_hit = static_cast<std::size_t>(hits) == objs.size();
      w.hit_rate = objs.empty()
                       ? 1.0
                       : static_cast<double>(hits) / static_cast<double>(objs.size());
      scanned = i + 1;
      if (w.full_hit) {
        selected.push_back(i);
        if (selected.size() >= m) break;
      }
    }
    // Partial hits by descending rate, ties in window order.
    if (selected.size() < m) {
      std::vector<std::size_t> partial;
      for (std::size_t i = 0; i < scanned; ++i)
        if (window[i].any_hit && !window[i].full_hit) partial.push_back(i);
      std::stable_sort(partial.begin(), partial.end(),
                       [&](std::size_t a, std::size_t b) {
                         return window[a].hit_rate > window[b].hit_rate;
                       });
      for (std::size_t i : partial) {
        if (selected.size() >= m) break;
        selected.push_back(i);
      }
    }
    // Zero-hit handling is what tells the policies apart.
    if (selected.size() < m) {
      DispatchPolicy effective = config_.policy;
      if (effective == DispatchPolicy::GoodCacheCompute)
        effective = cpu_utilization() >= config_.cpu_threshold
                        ? DispatchPolicy::MaxCacheHit
                        : DispatchPolicy::MaxComputeUtil;
      if (effective == DispatchPolicy::MaxCacheHit) {
        if (selected.empty()) {
          // A task whose objects are cached nowhere cannot do better on any
          // executor; dispatching it is the only way the cache ever fills.
          for (std::size_t i = 0; i < window.size() && selected.size() < m;
               ++i) {
            if (!window[i].any_hit && unavoidable_miss(window[i].id))
              selected.push_back(i);
          }
        }
      } else {
        // Fill to m from the window in queue order.
        for (std::size_t i = 0; i < window.size() && selected.size() < m;
             ++i) {
          if (std::find(selected.begin(), selected.end(), i) ==
              selected.end())
            selected.push_back(i);
        }
      }
    }
  }

  // Commit: remove selected tasks, restore an unselected parked task.
  std::vector<TaskId> out;
  out.reserve(selected.size());
  bool parked_selected = false;
  std::vector<std::ptrdiff_t> queue_indices;
  for (std::size_t i : selected) {
    out.push_back(window[i].id);
    if (window[i].queue_index < 0)
      parked_selected = true;
    else
      queue_indices.push_back(window[i].queue_index);
  }
  std::sort(queue_indices.rbegin(), queue_indices.rend());
  for (std::ptrdiff_t qi : queue_indices)
    wait_queue_.erase(wait_queue_.begin() + qi);
  if (has_parked) {
    if (!parked_selected) wait_queue_.push_front(parked_task_);
    parked_task_ = -1;
    parked_executor_ = kNoNode;
  }
  exec.pending = false;
  return out;
}

void Scheduler::on_tasks_assigned(NodeId id, int count) {
  auto& e = executors_.at(id);
  e.busy_slots += count;
  busy_slots_ += count;
  if (e.busy_slots > e.cpu_slots)
    throw std::logic_error("scheduler: slot overcommit");
}

void Scheduler::on_task_finished(NodeId id) {
  auto& e = executors_.at(id);
  if (e.busy_slots == 0) throw std::logic_error("scheduler: idle underflow");
  e.busy_slots -= 1;
  busy_slots_ -= 1;
}

void Scheduler::on_index_update(NodeId id,
                                const std::vector<ObjectId>& added,
                                const std::vector<ObjectId>& evicted) {
  auto it = executors_.find(id);
  if (it == executors_.end()) {
    std::fprintf(stderr, "scheduler: index update from unknown executor %d\n",
                 id);
    return;
  }
  for (ObjectId obj : added) {
    it->second.cached.insert(obj);
    file_index_[obj].insert(id);
  }
  for (ObjectId obj : evicted) {
    it->second.cached.erase(obj);
    auto fi = file_index_.find(obj);
    if (fi == file_index_.end()) continue;
    fi->second.erase(id);
    if (fi->second.empty()) file_index_.erase(fi);
  }
}

std::vector<NodeId> Scheduler::holders(ObjectId object) const {
  auto fi = file_index_.find(object);
  if (fi == file_index_.end()) return {};
  return {fi->second.begin(), fi->second.end()};
}

std::size_t Scheduler::holder_count(ObjectId object) const {
  auto fi = file_index_.find(object);
  return fi == file_index_.end() ? 0 : fi->second.size();
}

bool Scheduler::node_has(NodeId id, ObjectId object) const {
  auto it = executors_.find(id);
  return it != executors_.end() && it->second.cached.count(object) != 0;
}

HitCount Scheduler::classify_hit(TaskId task_id, NodeId executor) const {
  const auto& exec = executors_.at(executor);
  HitCount hc;
  for (ObjectId obj : task(task_id).required_objects) {
    if (exec.cached.count(obj))
      hc.local_hits += 1;
    else
      hc.misses += 1;
  }
  return hc;
}

HitCount Scheduler::classify_hit_any(TaskId task_id) const {
  HitCount hc;
  for (ObjectId obj : task(task_id).required_objects) {
    if (holder_count(obj) > 0)
      hc.local_hits += 1;
    else
      hc.misses += 1;
  }
  return hc;
}

HitCount Scheduler::classify_hit_free(TaskId task_id) const {
  HitCount hc;
  for (ObjectId obj : task(task_id).required_objects) {
    bool hit = false;
    auto fi = file_index_.find(obj);
    if (fi != file_index_.end()) {
      for (NodeId holder : fi->second) {
        if (is_free(executors_.at(holder))) {
          hit = true;
          break;
        }
      }
    }
    if (hit)
      hc.local_hits += 1;
    else
      hc.misses += 1;
  }
  return hc;
}

}  // namespace farmsim::sched
