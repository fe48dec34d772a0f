#pragma once

#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "farmsim/types.hpp"

namespace farmsim::cache {

enum class EvictionPolicy { Random, Fifo, Lru, Lfu };

const char* to_string(EvictionPolicy p);

/// Per-node cache with whole-object granularity and byte-exact capacity
/// accounting. Victims are chosen among unpinned, fully-arrived objects;
/// ties (LFU, and selection order for Random) break on insertion sequence
/// so runs are reproducible.
class NodeCache {
 public:
  enum class InsertStatus { Ok, ObjectTooLarge, AllPinned };

  struct InsertResult {
    InsertStatus status = InsertStatus::Ok;
    std::vector<ObjectId> evicted;  // in eviction order
  };

  NodeCache(Bits capacity_bits, EvictionPolicy policy, std::uint64_t seed = 0);

  /// Hit iff the object is resident and fully arrived; a hit refreshes the
  /// recency and frequency metadata.
  bool lookup(ObjectId id);

  /// Residency check without touching policy metadata.
  bool contains(ObjectId id) const;

  /// True if an entry exists at all, including in-flight reservations.
  bool has_entry(ObjectId id) const;

  /// Reserve space and add the object, evicting per policy as needed.
  /// With in_transit=true the entry only reserves capacity: it is invisible
  /// to lookup/contains and cannot be evicted until mark_arrived.
  InsertResult insert(ObjectId id, Bits size_bits, bool in_transit = false);

  /// Completes an in-flight reservation; counts as the object's first access.
  void mark_arrived(ObjectId id);

  /// Drop one object regardless of policy order (must be unpinned).
  void erase(ObjectId id);

  int pin(ObjectId id);    // throws std::logic_error("not-resident")
  int unpin(ObjectId id);  // throws std::logic_error on zero count

  Bits capacity_bits() const { return capacity_bits_; }
  Bits used_bits() const { return used_bits_; }
  std::size_t resident_count() const { return entries_.size(); }

  /// All fully-arrived object ids, sorted (for deterministic purge events).
  std::vector<ObjectId> resident_sorted() const;

 private:
  struct Entry {
    Bits size_bits = 0;
    int pin_count = 0;
    bool in_transit = false;
    std::uint64_t insert_seq = 0;
    std::uint64_t last_access_seq = 0;
    std::uint64_t access_count = 0;
  };

  bool plan_eviction(Bits need_bits, std::vector<ObjectId>& victims);

  Bits capacity_bits_;
  Bits used_bits_ = 0;
  EvictionPolicy policy_;
  std::uint64_t next_seq_ = 1;
  std::unordered_map<ObjectId, Entry> entries_;
  std::mt19937_64 rng_;
};

}  // namespace farmsim::cache
