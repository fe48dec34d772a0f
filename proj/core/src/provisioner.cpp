#include "farmsim/provisioner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace farmsim::prov {

const char* to_string(AllocationPolicy policy) {
  switch (policy) {
    case AllocationPolicy::OneAtATime: return "one-at-a-time";
    case AllocationPolicy::AllAtOnce: return "all-at-once";
    case AllocationPolicy::AllAtOnceByDemand: return "all-at-once-by-demand";
    case AllocationPolicy::Exponential: return "exponential";
  }
  return "unknown";
}

bool parse_allocation_policy(const std::string& name, AllocationPolicy& out) {
  if (name == "one-at-a-time") out = AllocationPolicy::OneAtATime;
  else if (name == "all-at-once") out = AllocationPolicy::AllAtOnce;
  else if (name == "all-at-once-by-demand")
    out = AllocationPolicy::AllAtOnceByDemand;
  else if (name == "exponential") out = AllocationPolicy::Exponential;
  else return false;
  return true;
}

int allocation_request_count(const ProvisionerConfig& config,
                             std::size_t queue_length, int registered,
                             int pending, int last_request) {
  if (config.disabled) return 0;
  int provisioned = registered + pending;
  int headroom = config.max_nodes - provisioned;
  if (headroom <= 0) return 0;
  double capacity =
      static_cast<double>(provisioned) * config.slots_per_node;
  if (static_cast<double>(queue_length) <= config.queue_threshold * capacity)
    return 0;
  switch (config.policy) {
    case AllocationPolicy::OneAtATime:
      return 1;
    case AllocationPolicy::AllAtOnce:
      return headroom;
    case AllocationPolicy::AllAtOnceByDemand: {
      double per_node = config.queue_threshold * config.slots_per_node;
      int target = static_cast<int>(std::ceil(
          static_cast<double>(queue_length) / std::max(per_node, 1e-9)));
      return std::clamp(target - provisioned, 0, headroom);
    }
    case AllocationPolicy::Exponential: {
      int want = std::max(1, static_cast<int>(std::llround(
                                 last_request * config.exponential_factor)));
      return std::min(want, headroom);
    }
  }
  return 0;
}

Provisioner::Provisioner(const ProvisionerConfig& config, std::uint64_t seed)
    : config_(config), rng_(mix_seed(seed, 3)) {
  if (config_.min_nodes > config_.max_nodes)
    throw std::invalid_argument("provisioner: min_nodes > max_nodes");
  if (config_.allocation_latency_lo_us > config_.allocation_latency_hi_us)
    throw std::invalid_argument("provisioner: latency lo > hi");
}

std::vector<NodeId> Provisioner::bootstrap() {
  std::vector<NodeId> ids;
  ids.reserve(config_.min_nodes);
  for (int i = 0; i < config_.min_nodes; ++i) ids.push_back(next_id_++);
  registered_ += config_.min_nodes;
  return ids;
}

std::vector<PendingAllocation> Provisioner::evaluate(std::size_t queue_length,
                                                     Micros now_us) {
  int count = allocation_request_count(config_, queue_length, registered_,
                                       pending_count(), last_request_);
  if (count <= 0) return {};
  last_request_ = count;
  std::vector<PendingAllocation> fresh;
  fresh.reserve(count);
  std::uniform_int_distribution<Micros> latency(
      config_.allocation_latency_lo_us, config_.allocation_latency_hi_us);
  for (int i = 0; i < count; ++i) {
    PendingAllocation p;
    p.id = next_id_++;
    p.ready_us = now_us + latency(rng_);
    fresh.push_back(p);
  }
  pipeline_.insert(pipeline_.end(), fresh.begin(), fresh.end());
  std::stable_sort(pipeline_.begin(), pipeline_.end(),
                   [](const PendingAllocation& a, const PendingAllocation& b) {
                     return a.ready_us < b.ready_us;
                   });
  return fresh;
}

std::vector<NodeId> Provisioner::collect_ready(Micros now_us) {
  std::vector<NodeId> out;
  std::size_t i = 0;
  while (i < pipeline_.size() && pipeline_[i].ready_us <= now_us) {
    out.push_back(pipeline_[i].id);
    ++i;
  }
  pipeline_.erase(pipeline_.begin(), pipeline_.begin() + i);
  registered_ += static_cast<int>(out.size());
  return out;
}

Micros Provisioner::next_ready_us() const {
  return pipeline_.empty() ? kNever : pipeline_.front().ready_us;
}

void Provisioner::on_node_idle(NodeId id, Micros now_us) {
  idle_since_.emplace(id, now_us);
}

void Provisioner::on_node_active(NodeId id) { idle_since_.erase(id); }

std::vector<NodeId> Provisioner::release_candidates(Micros now_us) const {
  if (config_.idle_release_timeout_us == kNever) return {};
  int releasable = registered_ - config_.min_nodes;
  if (releasable <= 0) return {};
  std::vector<std::pair<Micros, NodeId>> aged;
  for (const auto& [id, since] : idle_since_) {
    if (now_us >= since && now_us - since >= config_.idle_release_timeout_us)
      aged.emplace_back(since, id);
  }
  std::sort(aged.begin(), aged.end());
  std::vector<NodeId> out;
  for (const auto& [since, id] : aged) {
    if (static_cast<int>(out.size()) >= releasable) break;
    out.push_back(id);
  }
  return out;
}

void Provisioner::confirm_release(NodeId id) {
  idle_since_.erase(id);
  registered_ -= 1;
}

}  // namespace farmsim::prov
