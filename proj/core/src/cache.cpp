#include "farmsim/cache.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace farmsim::cache {

const char* to_string(EvictionPolicy policy) {
  switch (policy) {
    case EvictionPolicy::Random: return "random";
    case EvictionPolicy::Fifo: return "fifo";
    case EvictionPolicy::Lru: return "lru";
    case EvictionPolicy::Lfu: return "lfu";
  }
  return "unknown";
}

NodeCache::NodeCache(Bits capacity_bits, EvictionPolicy policy,
                     std::uint64_t seed)
    : capacity_bits_(capacity_bits), policy_(policy), rng_(seed) {}

bool NodeCache::lookup(ObjectId id) {
  auto it = entries_.find(id);
  if (it == entries_.end() || it->second.in_transit) return false;
  it->second.last_access_seq = next_seq_++;
  it->second.access_count += 1;
  return true;
}

bool NodeCache::contains(ObjectId id) const {
  auto it = entries_.find(id);
  return it != entries_.end() && !it->second.in_transit;
}

bool NodeCache::has_entry(ObjectId id) const {
  return entries_.count(id) != 0;
}

// `need` is the free space the caller must end up with, not the overflow
// amount: victims accumulate until free_bits covers it.
bool NodeCache::plan_eviction(Bits need, std::vector<ObjectId>& victims) {
  // Collect unpinned, fully-arrived entries; reservations stay untouchable
  // until the transfer lands.
  struct Candidate {
    ObjectId id;
    Bits size;
    std::uint64_t insert_seq;
    std::uint64_t last_access_seq;
    std::uint64_t access_count;
  };
  std::vector<Candidate> pool;
  pool.reserve(entries_.size());
  Bits evictable = 0;
  for (const auto& [id, e] : entries_) {
    if (e.pin_count > 0 || e.in_transit) continue;
    pool.push_back({id, e.size_bits, e.insert_seq, e.last_access_seq,
                    e.access_count});
    evictable += e.size_bits;
  }
  Bits free_bits = capacity_bits_ - used_bits_;
  if (free_bits + evictable < need) return false;

  switch (policy_) {
    case EvictionPolicy::Fifo:
      std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        return a.insert_seq < b.insert_seq;
      });
      break;
    case EvictionPolicy::Lru:
      std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        return a.last_access_seq < b.last_access_seq;
      });
      break;
    case EvictionPolicy::Lfu:
      std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        if (a.access_count != b.access_count)
          return a.access_count < b.access_count;
        return a.insert_seq < b.insert_seq;
      });
      break;
    case EvictionPolicy::Random: {
      // Stable base order so the shuffle depends only on the seed stream.
      std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        return a.insert_seq < b.insert_seq;
      });
      for (std::size_t i = pool.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng_() % i);
        std::swap(pool[i - 1], pool[j]);
      }
      break;
    }
  }

  for (const auto& c : pool) {
    if (free_bits >= need) break;
    victims.push_back(c.id);
    free_bits += c.size;
  }
  return free_bits >= need;
}

NodeCache::InsertResult NodeCache::insert(ObjectId id, Bits size_bits,
                                          bool in_transit) {
  InsertResult result;
  if (size_bits > capacity_bits_) {
    result.status = InsertStatus::ObjectTooLarge;
    return result;
  }
  if (auto it = entries_.find(id); it != entries_.end()) {
    // Re-inserting a resident or reserved object is a no-op refresh.
    result.status = InsertStatus::Ok;
    return result;
  }
  if (used_bits_ + size_bits > capacity_bits_) {
    std::vector<ObjectId> victims;
    if (!plan_eviction(size_bits, victims)) {
      result.status = InsertStatus::AllPinned;
      return result;
    }
    for (ObjectId v : victims) {
      used_bits_ -= entries_.at(v).size_bits;
      entries_.erase(v);
    }
    result.evicted = std::move(victims);
  }
  Entry e;
  e.size_bits = size_bits;
  e.in_transit = in_transit;
  e.insert_seq = next_seq_++;
  e.last_access_seq = e.insert_seq;
  e.access_count = in_transit ? 0 : 1;
  entries_.emplace(id, e);
  used_bits_ += size_bits;
  result.status = InsertStatus::Ok;
  return result;
}

void NodeCache::mark_arrived(ObjectId id) {
  auto it = entries_.find(id);
  if (it == entries_.end() || !it->second.in_transit)
    throw std::logic_error("mark_arrived: no in-transit entry");
  it->second.in_transit = false;
  it->second.last_access_seq = next_seq_++;
  it->second.access_count = 1;
}

void NodeCache::erase(ObjectId id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) return;
  used_bits_ -= it->second.size_bits;
  entries_.erase(it);
}

int NodeCache::pin(ObjectId id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::logic_error("pin: not-resident");
  return ++it->second.pin_count;
}

int NodeCache::unpin(ObjectId id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::logic_error("unpin: not-resident");
  if (it->second.pin_count == 0) throw std::logic_error("unpin: zero-count");
  return --it->second.pin_count;
}

std::vector<ObjectId> NodeCache::resident_sorted() const {
  std::vector<ObjectId> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) {
    if (!e.in_transit) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace farmsim::cache
