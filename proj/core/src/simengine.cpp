#include "farmsim/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace farmsim::sim {

namespace {
constexpr Micros kNever = std::numeric_limits<Micros>::max();

Micros ceil_div_time(Bits bits, Bps rate) {
  if (bits == 0) return 0;
  unsigned __int128 num =
      static_cast<unsigned __int128>(bits) * kMicrosPerSecond;
  return static_cast<Micros>((num + rate - 1) / rate);
}
}  // namespace

Engine::Engine(const SimConfig& config)
    : config_(config), ledger_(config.sample_interval_us) {
  if (config_.dispatch_rate_cap_per_s <= 0.0)
    throw std::invalid_argument("engine: dispatch rate cap must be positive");
  if (config_.node.cpu_slots < 1)
    throw std::invalid_argument("engine: cpu_slots must be >= 1");
  if (config_.node.compute_speed <= 0.0)
    throw std::invalid_argument("engine: compute_speed must be positive");
  if (config_.max_time_factor < 1.0)
    throw std::invalid_argument("engine: max_time_factor must be >= 1");
  cycle_interval_us_ = static_cast<Micros>(
      std::ceil(1e6 / config_.dispatch_rate_cap_per_s));
  if (cycle_interval_us_ == 0) cycle_interval_us_ = 1;
  file_size_bits_ = config_.workload.file_size_bits;
}

Engine::~Engine() = default;

void Engine::push_event(Micros time, Kind kind, std::int64_t a,
                        std::int64_t b) {
  heap_.push(Event{time, next_seq_++, kind, a, b});
}

void Engine::sync_ledger_state(Micros now) {
  ledger_.advance_to(now);
  ledger_.set_busy_slots(scheduler_->busy_slots());
  ledger_.set_total_slots(scheduler_->total_slots());
  ledger_.set_queue_len(scheduler_->queue_length());
}

void Engine::maybe_schedule_cycle(Micros now) {
  if (cycle_scheduled_ || done_) return;
  if (scheduler_->queue_length() == 0) return;
  if (scheduler_->free_count() == 0) return;
  Micros t = first_cycle_
                 ? now
                 : std::max(now, last_cycle_us_ + cycle_interval_us_);
  push_event(t, Kind::DispatchCycle);
  cycle_scheduled_ = true;
}

// ---------------------------------------------------------------------------
// Transfer fluid model: each transfer's rate is the minimum of its two
// endpoint shares, a share being the endpoint bandwidth split evenly over
// the transfers touching it. Rates only change when a transfer starts or
// ends, so remaining bits advance piecewise-linearly between those events.

const std::set<int>& Engine::endpoint_transfers(NodeId endpoint) const {
  if (endpoint == kNoNode) return store_transfers_;
  return nodes_.at(endpoint).transfers;
}

Bps Engine::endpoint_share(NodeId endpoint) const {
  const std::set<int>& set = endpoint_transfers(endpoint);
  std::size_t load = std::max<std::size_t>(1, set.size());
  Bps ideal = endpoint == kNoNode ? config_.store.ideal_bandwidth_bps
                                  : config_.node.bandwidth_bps;
  return std::max<Bps>(1, ideal / load);
}

Bps Engine::transfer_rate(const Transfer& t) const {
  return std::min(endpoint_share(t.src), endpoint_share(t.dst));
}

void Engine::advance_transfer(Transfer& t, Micros now) {
  if (now <= t.last_us) return;
  Micros dt = now - t.last_us;
  t.last_us = now;
  if (t.latency_left_us > 0) {
    Micros burn = std::min(t.latency_left_us, dt);
    t.latency_left_us -= burn;
    dt -= burn;
  }
  if (dt == 0 || t.remaining == 0) return;
  unsigned __int128 moved =
      static_cast<unsigned __int128>(t.rate) * dt / kMicrosPerSecond;
  Bits m = moved > t.remaining ? t.remaining : static_cast<Bits>(moved);
  t.remaining -= m;
}

void Engine::advance_endpoint(NodeId endpoint, Micros now) {
  for (int tid : endpoint_transfers(endpoint))
    advance_transfer(transfers_.at(tid), now);
}

void Engine::refresh_endpoint(NodeId endpoint, Micros now) {
  Bps allocated = 0;
  for (int tid : endpoint_transfers(endpoint)) {
    Transfer& t = transfers_.at(tid);
    t.rate = transfer_rate(t);
    t.done_us = t.remaining == 0
                    ? now + t.latency_left_us
                    : now + t.latency_left_us + ceil_div_time(t.remaining,
                                                              t.rate);
    allocated += t.rate;
  }
  Bps capacity = endpoint == kNoNode ? config_.store.ideal_bandwidth_bps
                                     : config_.node.bandwidth_bps;
  if (!endpoint_transfers(endpoint).empty()) {
    ++bandwidth_recalcs_;
    if (allocated > std::max<Bps>(capacity, endpoint_transfers(endpoint).size()))
      throw std::logic_error("engine: endpoint bandwidth overcommitted");
  }
}

void Engine::arm_transfer_wake(Micros now) {
  (void)now;
  if (transfers_.empty()) return;
  Micros best = kNever;
  int best_id = std::numeric_limits<int>::max();
  for (const auto& [tid, t] : transfers_) {
    if (t.done_us < best || (t.done_us == best && tid < best_id)) {
      best = t.done_us;
      best_id = tid;
    }
  }
  if (wake_armed_ && armed_wake_us_ == best) return;
  wake_generation_ += 1;
  armed_wake_us_ = best;
  wake_armed_ = true;
  push_event(best, Kind::TransferWake,
             static_cast<std::int64_t>(wake_generation_));
}

void Engine::handle_transfer_wake(Micros now, std::uint64_t generation) {
  if (generation != wake_generation_) return;  // superseded arming
  wake_armed_ = false;
  while (true) {
    int pick = -1;
    Micros best = kNever;
    for (const auto& [tid, t] : transfers_) {
      if (t.done_us > now) continue;
      if (t.done_us < best || (t.done_us == best && tid < pick) || pick < 0) {
        best = t.done_us;
        pick = tid;
      }
    }
    if (pick < 0) break;
    complete_transfer(pick, now);
  }
  arm_transfer_wake(now);
}

void Engine::complete_transfer(int tid, Micros now) {
  {
    Transfer& ref = transfers_.at(tid);
    advance_endpoint(ref.src, now);
    advance_endpoint(ref.dst, now);
  }
  Transfer t = std::move(transfers_.at(tid));
  if (t.remaining != 0)
    throw std::logic_error("engine: transfer completed with bits remaining");
  if (t.src != kNoNode) nodes_.at(t.src).transfers.erase(tid);
  if (t.src == kNoNode) store_transfers_.erase(tid);
  nodes_.at(t.dst).transfers.erase(tid);
  transfers_.erase(tid);
  if (t.caches) inflight_.erase({t.dst, t.obj});
  refresh_endpoint(t.src, now);
  refresh_endpoint(t.dst, now);

  if (t.src != kNoNode) nodes_.at(t.src).cache->unpin(t.obj);

  Node& dst = nodes_.at(t.dst);
  if (t.caches) dst.cache->mark_arrived(t.obj);

  // The initiating access moves the bits over its source class; tasks that
  // joined the in-flight copy read it locally once it lands.
  ledger_.record_bits(t.cls, t.size);
  for (std::size_t i = 1; i < t.waiters.size(); ++i)
    ledger_.record_bits(metrics::AccessClass::Local, t.size);

  for (TaskId task : t.waiters) {
    bool pinned = false;
    if (t.caches) {
      dst.cache->pin(t.obj);
      pinned = true;
    }
    object_ready(now, task, t.obj, pinned);
  }
}

// ---------------------------------------------------------------------------
// Task lifecycle.

void Engine::handle_arrival(Micros now, TaskId task) {
  scheduler_->enqueue(task);
  sync_ledger_state(now);
  maybe_schedule_cycle(now);
  if (next_arrival_ < tasks_.size()) {
    TaskId next = tasks_[next_arrival_].id;
    push_event(tasks_[next_arrival_].arrival_us, Kind::Arrival, next);
    next_arrival_ += 1;
  }
}

void Engine::handle_dispatch_cycle(Micros now) {
  cycle_scheduled_ = false;
  if (done_ || scheduler_->queue_length() == 0) return;
  last_cycle_us_ = now;
  first_cycle_ = false;
  NodeId node = scheduler_->notify_candidate();
  if (node == kNoNode) return;  // nothing free; a free event re-arms
  push_event(now, Kind::Pickup, node);
}

void Engine::handle_pickup(Micros now, NodeId node) {
  std::vector<TaskId> picked = scheduler_->select_tasks_for_pickup(node);
  if (picked.empty()) {
    if (config_.empty_pickup_backoff_us > 0 && !done_) {
      scheduler_->set_suspended(node, true);
      push_event(now + config_.empty_pickup_backoff_us, Kind::ExecutorResume,
                 node);
    }
  } else {
    if (decision_trace_) {
      for (TaskId t : picked) {
        auto hc = scheduler_->classify_hit(t, node);
        *decision_trace_ << now << '\t' << t << '\t' << node_name(node)
                         << '\t' << to_string(config_.scheduler.policy)
                         << '\t' << hc.local_hits << '\t' << hc.misses
                         << '\n';
      }
    }
    scheduler_->on_tasks_assigned(node, static_cast<int>(picked.size()));
    Node& n = nodes_.at(node);
    n.busy_slots += static_cast<int>(picked.size());
    provisioner_->on_node_active(node);
    for (TaskId t : picked) {
      TaskRuntime& rt = runtime_[t];
      rt.node = node;
      rt.dispatch_us = now;
      rt.compute_us_eff = static_cast<Micros>(std::llround(
          static_cast<double>(tasks_[t].compute_us) /
          config_.node.compute_speed));
      push_event(now + tasks_[t].overhead_us, Kind::TaskStart, t);
    }
    sync_ledger_state(now);
  }
  maybe_schedule_cycle(now);
}

void Engine::handle_task_start(Micros now, TaskId task) {
  begin_data_phase(now, task);
}

void Engine::begin_data_phase(Micros now, TaskId task) {
  TaskRuntime& rt = runtime_[task];
  rt.data_start_us = now;
  rt.outstanding = 0;
  Node& node = nodes_.at(rt.node);
  for (ObjectId obj : tasks_[task].required_objects) {
    if (node.cache->lookup(obj)) {
      ledger_.record_access(metrics::AccessClass::Local);
      ledger_.record_bits(metrics::AccessClass::Local, file_size_bits_);
      node.cache->pin(obj);
      rt.pinned.push_back(obj);
      continue;
    }
    auto inflight = inflight_.find({rt.node, obj});
    if (inflight != inflight_.end()) {
      // The copy is already on its way here; the access will be served
      // locally once it lands.
      ledger_.record_access(metrics::AccessClass::Local);
      transfers_.at(inflight->second).waiters.push_back(task);
      rt.outstanding += 1;
      continue;
    }
    fetch_object(now, task, obj);
    rt.outstanding += 1;
  }
  if (rt.outstanding == 0) start_compute(now, task);
}

void Engine::fetch_object(Micros now, TaskId task, ObjectId obj) {
  TaskRuntime& rt = runtime_[task];
  Node& dst = nodes_.at(rt.node);

  // Source: least-loaded peer holding a resident copy, ties by id;
  // otherwise the persistent store.
  NodeId src = kNoNode;
  std::size_t best_load = 0;
  for (NodeId h : scheduler_->holders(obj)) {
    if (h == rt.node) continue;
    auto it = nodes_.find(h);
    if (it == nodes_.end() || !it->second.cache->contains(obj)) continue;
    std::size_t load = it->second.transfers.size();
    if (src == kNoNode || load < best_load) {
      src = h;
      best_load = load;
    }
  }
  metrics::AccessClass cls =
      src == kNoNode ? metrics::AccessClass::Store : metrics::AccessClass::Remote;
  ledger_.record_access(cls);

  // Cache the copy unless the object is already at its replication cap or
  // the local cache cannot take it; then the bytes only stream through.
  // first-available ignores data placement entirely: it neither consults nor
  // feeds the file index, so its fetches always stream.
  bool caches = false;
  if (config_.scheduler.policy != sched::DispatchPolicy::FirstAvailable &&
      scheduler_->holder_count(obj) <
          static_cast<std::size_t>(config_.scheduler.max_replication)) {
    auto res = dst.cache->insert(obj, file_size_bits_, true);
    if (res.status == cache::NodeCache::InsertStatus::Ok) {
      caches = true;
      post_index_update(now, rt.node, {obj}, res.evicted);
    }
  }

  if (src != kNoNode) nodes_.at(src).cache->pin(obj);

  int tid = next_transfer_id_++;
  advance_endpoint(src, now);
  advance_endpoint(rt.node, now);
  Transfer t;
  t.id = tid;
  t.obj = obj;
  t.size = file_size_bits_;
  t.src = src;
  t.dst = rt.node;
  t.remaining = file_size_bits_;
  t.last_us = now;
  t.latency_left_us =
      src == kNoNode ? config_.store.transfer_latency_us : 0;
  t.caches = caches;
  t.cls = cls;
  t.waiters.push_back(task);
  transfers_.emplace(tid, std::move(t));
  if (src == kNoNode)
    store_transfers_.insert(tid);
  else
    nodes_.at(src).transfers.insert(tid);
  dst.transfers.insert(tid);
  if (caches) inflight_[{rt.node, obj}] = tid;
  refresh_endpoint(src, now);
  refresh_endpoint(rt.node, now);
  arm_transfer_wake(now);
}

void Engine::object_ready(Micros now, TaskId task, ObjectId obj,
                          bool pinned) {
  TaskRuntime& rt = runtime_[task];
  if (pinned) rt.pinned.push_back(obj);
  rt.outstanding -= 1;
  if (rt.outstanding == 0) start_compute(now, task);
}

void Engine::start_compute(Micros now, TaskId task) {
  push_event(now + runtime_[task].compute_us_eff, Kind::TaskComplete, task);
}

void Engine::handle_task_complete(Micros now, TaskId task) {
  TaskRuntime& rt = runtime_[task];
  Node& node = nodes_.at(rt.node);
  for (ObjectId obj : rt.pinned) node.cache->unpin(obj);
  rt.pinned.clear();
  node.busy_slots -= 1;
  scheduler_->on_task_finished(rt.node);
  if (node.busy_slots == 0) provisioner_->on_node_idle(rt.node, now);

  metrics::TaskRecord rec;
  rec.id = task;
  rec.arrival_us = tasks_[task].arrival_us;
  rec.wq_us = rt.dispatch_us - tasks_[task].arrival_us;
  rec.e_us = tasks_[task].overhead_us + rt.compute_us_eff;
  rec.d_us = now - rt.compute_us_eff - rt.data_start_us;
  ledger_.record_task(rec, now);
  sync_ledger_state(now);

  completed_ += 1;
  if (completed_ == tasks_.size()) {
    done_ = true;
    wet_us_ = now;
    return;
  }
  maybe_schedule_cycle(now);
}

// ---------------------------------------------------------------------------
// Pool management and bookkeeping events.

void Engine::register_node(NodeId id, Micros now) {
  Node n;
  n.cache = std::make_unique<cache::NodeCache>(
      config_.node.cache_bits, config_.eviction,
      mix_seed(config_.seed, 0x1000u + static_cast<std::uint64_t>(id)));
  nodes_.emplace(id, std::move(n));
  scheduler_->register_executor(id, config_.node.cpu_slots);
  provisioner_->on_node_idle(id, now);
  sync_ledger_state(now);
  maybe_schedule_cycle(now);
}

void Engine::release_node(NodeId id, Micros now) {
  scheduler_->deregister_executor(id);
  nodes_.erase(id);
  provisioner_->confirm_release(id);
  sync_ledger_state(now);
}

void Engine::handle_allocation_ready(Micros now) {
  for (NodeId id : provisioner_->collect_ready(now)) register_node(id, now);
}

void Engine::handle_provisioner_tick(Micros now) {
  if (done_) return;
  auto fresh = provisioner_->evaluate(scheduler_->queue_length(), now);
  for (const auto& alloc : fresh)
    push_event(alloc.ready_us, Kind::AllocationReady);
  for (NodeId id : provisioner_->release_candidates(now)) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) continue;
    if (it->second.busy_slots > 0 || !it->second.transfers.empty()) continue;
    if (scheduler_->executor_state(id) != sched::ExecState::Free) continue;
    release_node(id, now);
  }
  if (provision_trace_)
    *provision_trace_ << now << ',' << provisioner_->registered_count() << ','
                      << provisioner_->pending_count() << ','
                      << scheduler_->queue_length() << '\n';
  push_event(now + config_.provisioner_tick_us, Kind::ProvisionerTick);
}

void Engine::handle_stats_sample(Micros now) {
  if (done_) return;
  Micros half = config_.sample_interval_us / 2;
  Micros mid = now > half ? now - half : 0;
  Bps ideal = workload::ideal_throughput(schedule_,
                                         config_.workload.file_size_bits, mid);
  int busy_nodes = 0;
  for (const auto& [id, n] : nodes_)
    if (n.busy_slots > 0) ++busy_nodes;
  double util = scheduler_->total_slots() > 0
                    ? static_cast<double>(scheduler_->busy_slots()) /
                          scheduler_->total_slots()
                    : 0.0;
  ledger_.advance_to(now);
  ledger_.take_sample(now, ideal, scheduler_->registered_count(), busy_nodes,
                      util, scheduler_->queue_length());
  push_event(now + config_.sample_interval_us, Kind::StatsSample);
}

void Engine::post_index_update(Micros now, NodeId node,
                               const std::vector<ObjectId>& added,
                               const std::vector<ObjectId>& evicted) {
  // Insertions are visible immediately: the dispatcher ordered the fetch, so
  // it learns of the copy synchronously. Evictions are local cache decisions
  // and reach the index only with the node's next periodic report, which is
  // what makes the index loosely coherent under churn.
  if (!added.empty()) scheduler_->on_index_update(node, added, {});
  if (evicted.empty()) return;
  if (config_.index_staleness_us == 0) {
    scheduler_->on_index_update(node, {}, evicted);
    return;
  }
  pending_updates_.push_back({node, {}, evicted});
  push_event(now + config_.index_staleness_us, Kind::IndexUpdate,
             static_cast<std::int64_t>(pending_updates_.size() - 1));
}

// ---------------------------------------------------------------------------

SimResult Engine::run() {
  if (config_.workload.selection != workload::Selection::Trace) {
    schedule_ = workload::build_schedule(config_.workload);
    ledger_.set_intervals(schedule_, config_.workload.compute_us);
  }
  tasks_ = workload::build_tasks(schedule_, config_.workload);
  if (tasks_.empty()) throw std::invalid_argument("engine: no tasks");
  runtime_.assign(tasks_.size(), TaskRuntime{});

  ideal_wet_us_ = 0;
  for (const auto& t : tasks_)
    ideal_wet_us_ = std::max(ideal_wet_us_, t.arrival_us + t.compute_us);
  max_time_us_ = static_cast<Micros>(
      static_cast<double>(ideal_wet_us_) * config_.max_time_factor);

  sched::SchedulerConfig sc = config_.scheduler;
  scheduler_ = std::make_unique<sched::Scheduler>(sc, &tasks_);
  prov::ProvisionerConfig pc = config_.provisioner;
  pc.slots_per_node = config_.node.cpu_slots;
  provisioner_ = std::make_unique<prov::Provisioner>(pc, config_.seed);

  for (NodeId id : provisioner_->bootstrap()) register_node(id, 0);

  next_arrival_ = 0;
  if (!tasks_.empty()) {
    push_event(tasks_[0].arrival_us, Kind::Arrival, tasks_[0].id);
    next_arrival_ = 1;
  }
  push_event(config_.provisioner_tick_us, Kind::ProvisionerTick);
  if (config_.sample_interval_us > 0)
    push_event(config_.sample_interval_us, Kind::StatsSample);

  while (!heap_.empty()) {
    Event ev = heap_.top();
    heap_.pop();
    if (ev.time > max_time_us_)
      throw StallError("stalled: exceeded the simulated-time guard");
    switch (ev.kind) {
      case Kind::Arrival:
        handle_arrival(ev.time, static_cast<TaskId>(ev.a));
        break;
      case Kind::DispatchCycle:
        handle_dispatch_cycle(ev.time);
        break;
      case Kind::Pickup:
        handle_pickup(ev.time, static_cast<NodeId>(ev.a));
        break;
      case Kind::TaskStart:
        handle_task_start(ev.time, static_cast<TaskId>(ev.a));
        break;
      case Kind::TransferWake:
        handle_transfer_wake(ev.time, static_cast<std::uint64_t>(ev.a));
        break;
      case Kind::TaskComplete:
        handle_task_complete(ev.time, static_cast<TaskId>(ev.a));
        break;
      case Kind::AllocationReady:
        handle_allocation_ready(ev.time);
        break;
      case Kind::ProvisionerTick:
        handle_provisioner_tick(ev.time);
        break;
      case Kind::IndexUpdate: {
        const auto& u = pending_updates_.at(static_cast<std::size_t>(ev.a));
        scheduler_->on_index_update(u.node, u.added, u.evicted);
        break;
      }
      case Kind::StatsSample:
        handle_stats_sample(ev.time);
        break;
      case Kind::ExecutorResume:
        if (scheduler_->is_registered(static_cast<NodeId>(ev.a))) {
          scheduler_->set_suspended(static_cast<NodeId>(ev.a), false);
          maybe_schedule_cycle(ev.time);
        }
        break;
    }
    if (done_) break;
  }
  if (!done_)
    throw StallError("stalled: event queue drained with tasks outstanding");
  if (!transfers_.empty())
    throw std::logic_error("engine: transfers outlived the workload");

  int busy_nodes = 0;
  ledger_.advance_to(wet_us_);
  ledger_.take_sample(wet_us_,
                      workload::ideal_throughput(
                          schedule_, config_.workload.file_size_bits,
                          wet_us_ > 1 ? wet_us_ - 1 : 0),
                      scheduler_->registered_count(), busy_nodes, 0.0,
                      scheduler_->queue_length());
  ledger_.finalize(wet_us_);

  SimResult result;
  result.ledger = std::move(ledger_);
  result.wet_us = wet_us_;
  result.ideal_wet_us = ideal_wet_us_;
  result.schedule = std::move(schedule_);
  result.bandwidth_recalcs = bandwidth_recalcs_;
  return result;
}

}  // namespace farmsim::sim
