#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "farmsim/types.hpp"

namespace farmsim::prov {

constexpr Micros kNever = std::numeric_limits<Micros>::max();

enum class AllocationPolicy {
  OneAtATime,
  AllAtOnce,
  AllAtOnceByDemand,
  Exponential,
};

const char* to_string(AllocationPolicy policy);
bool parse_allocation_policy(const std::string& name, AllocationPolicy& out);

struct ProvisionerConfig {
  int min_nodes = 1;
  int max_nodes = 64;
  AllocationPolicy policy = AllocationPolicy::AllAtOnceByDemand;
  double queue_threshold = 1.0;  // queued tasks per provisioned slot
  Micros allocation_latency_lo_us = 30'000'000;
  Micros allocation_latency_hi_us = 60'000'000;
  Micros idle_release_timeout_us = kNever;
  double exponential_factor = 2.0;
  int slots_per_node = 2;
  bool disabled = false;
};

/// How many nodes a single evaluation requests. Growth triggers when the
/// queue exceeds queue_threshold tasks per already-provisioned slot
/// (registered plus pending); the policy sizes the request. Pure so the
/// policy table can be tested directly.
int allocation_request_count(const ProvisionerConfig& config,
                             std::size_t queue_length, int registered,
                             int pending, int last_request);

struct PendingAllocation {
  NodeId id = kNoNode;
  Micros ready_us = 0;
};

/// Queue-length driven pool manager. Owns node-id assignment and the
/// allocation pipeline; the engine turns PendingAllocations into
/// registration events and reports idle/active transitions back.
class Provisioner {
 public:
  Provisioner(const ProvisionerConfig& config, std::uint64_t seed);

  /// Registers min_nodes immediately (time zero); returns their ids.
  std::vector<NodeId> bootstrap();

  /// Decides growth; sampled latency per node. Returned allocations are
  /// also retained internally until collected.
  std::vector<PendingAllocation> evaluate(std::size_t queue_length,
                                          Micros now_us);

  /// Moves allocations with ready_us <= now into the registered pool and
  /// returns their ids in ready order.
  std::vector<NodeId> collect_ready(Micros now_us);
  Micros next_ready_us() const;  // kNever when pipeline empty

  void on_node_idle(NodeId id, Micros now_us);
  void on_node_active(NodeId id);
  /// Nodes idle past the timeout, oldest first, respecting min_nodes.
  /// Caller confirms each actual release.
  std::vector<NodeId> release_candidates(Micros now_us) const;
  void confirm_release(NodeId id);

  int registered_count() const { return registered_; }
  int pending_count() const { return static_cast<int>(pipeline_.size()); }
  const ProvisionerConfig& config() const { return config_; }

 private:
  ProvisionerConfig config_;
  std::mt19937_64 rng_;
  std::vector<PendingAllocation> pipeline_;  // sorted by ready_us
  std::map<NodeId, Micros> idle_since_;
  int registered_ = 0;
  int last_request_ = 0;
  NodeId next_id_ = 0;
};

}  // namespace farmsim::prov
