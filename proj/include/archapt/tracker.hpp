#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <unordered_map>
#include <vector>

#include "archapt/errors.hpp"

namespace archapt {

enum class ResolveHow { Flushed, SkippedWithChecksum };

struct TrackedObject {
  uint64_t id = 0;
  uint64_t addr = 0;
  uint32_t size = 0;
  uint32_t blocks = 0;
};

struct AccessDecision {
  bool completed_prior_flush = false;
  bool new_pending = false;
};

// The history management unit: a flat LRU queue sized in 64-byte blocks to
// the last-level-cache capacity, plus a hash table over the queued objects.
// An object falling out of the queue is estimated to have left the hardware
// cache, so its pending flush is skipped; an object seen again while queued
// is estimated resident, so the pending flush from its previous write is
// completed on the spot.
//
// The tracker itself performs no flush or checksum work; it reports each
// decision through the two callbacks, which the transaction runtime wires
// to the emulator and the persistence unit.
class LocalityTracker {
 public:
  // complete(obj, owner): flush obj's blocks now, fold checksums, notify owner
  // skip(obj, owner, drained): count skipped blocks, build checksums, notify owner
  using CompleteFn = std::function<void(const TrackedObject&, uint64_t owner)>;
  using SkipFn = std::function<void(const TrackedObject&, uint64_t owner, bool drained)>;

  explicit LocalityTracker(uint64_t capacity_blocks) : capacity_(capacity_blocks) {}

  void set_callbacks(CompleteFn complete, SkipFn skip) {
    complete_ = std::move(complete);
    skip_ = std::move(skip);
  }

  AccessDecision record_access(const TrackedObject& obj, bool is_write, uint64_t txn);
  std::vector<uint64_t> evict_to_fit();  // ids evicted
  void drain(uint64_t txn);
  void drain_all();
  void cancel_pending(uint64_t object_id, uint64_t txn);  // abort path

  bool contains(uint64_t object_id) const { return index_.count(object_id) != 0; }
  bool has_pending(uint64_t object_id) const;
  uint64_t occupancy_blocks() const { return occupancy_; }
  uint64_t capacity_blocks() const { return capacity_; }
  uint64_t entries() const { return queue_.size(); }

 private:
  struct Entry {
    TrackedObject obj;
    bool pending = false;
    uint64_t owner_txn = 0;
  };

  void resolve_skip(Entry& e, bool drained);

  uint64_t capacity_;
  uint64_t occupancy_ = 0;
  std::list<Entry> queue_;  // front = most recently used
  std::unordered_map<uint64_t, std::list<Entry>::iterator> index_;
  CompleteFn complete_;
  SkipFn skip_;
};

}  // namespace archapt
