#include "archapt/tracker.hpp"

#include <cassert>

namespace archapt {

AccessDecision LocalityTracker::record_access(const TrackedObject& obj, bool is_write,
                                              uint64_t txn) {
  if (obj.blocks == 0) throw UsageError("tracked object has no blocks");
  AccessDecision d;
  auto it = index_.find(obj.id);
  if (it != index_.end()) {
    Entry e = *it->second;
    queue_.erase(it->second);
    if (e.pending) {
      // the previous write's flush must have been pending; finish it now
      if (complete_) complete_(e.obj, e.owner_txn);
      d.completed_prior_flush = true;
      e.pending = false;
      e.owner_txn = 0;
    }
    if (is_write) {
      e.pending = true;
      e.owner_txn = txn;
      d.new_pending = true;
    }
    queue_.push_front(e);
    index_[obj.id] = queue_.begin();
    return d;
  }

  Entry e{obj, is_write, is_write ? txn : 0};
  d.new_pending = is_write;
  queue_.push_front(e);
  index_[obj.id] = queue_.begin();
  occupancy_ += obj.blocks;
  evict_to_fit();
  return d;
}

void LocalityTracker::resolve_skip(Entry& e, bool drained) {
  if (skip_) skip_(e.obj, e.owner_txn, drained);
  e.pending = false;
  e.owner_txn = 0;
}

std::vector<uint64_t> LocalityTracker::evict_to_fit() {
  std::vector<uint64_t> evicted;
  while (occupancy_ > capacity_ && !queue_.empty()) {
    Entry e = queue_.back();
    queue_.pop_back();
    index_.erase(e.obj.id);
    occupancy_ -= e.obj.blocks;
    if (e.pending) resolve_skip(e, false);
    evicted.push_back(e.obj.id);
  }
  return evicted;
}

void LocalityTracker::drain(uint64_t txn) {
  // eviction semantics for everything the transaction still has pending
  for (auto it = queue_.begin(); it != queue_.end();) {
    if (it->pending && it->owner_txn == txn) {
      Entry e = *it;
      index_.erase(e.obj.id);
      occupancy_ -= e.obj.blocks;
      it = queue_.erase(it);
      resolve_skip(e, true);
    } else {
      ++it;
    }
  }
}

void LocalityTracker::drain_all() {
  for (auto it = queue_.begin(); it != queue_.end();) {
    if (it->pending) {
      Entry e = *it;
      index_.erase(e.obj.id);
      occupancy_ -= e.obj.blocks;
      it = queue_.erase(it);
      resolve_skip(e, true);
    } else {
      ++it;
    }
  }
}

void LocalityTracker::cancel_pending(uint64_t object_id, uint64_t txn) {
  auto it = index_.find(object_id);
  if (it == index_.end()) return;
  if (it->second->pending && it->second->owner_txn == txn) {
    it->second->pending = false;
    it->second->owner_txn = 0;
  }
}

bool LocalityTracker::has_pending(uint64_t object_id) const {
  auto it = index_.find(object_id);
  return it != index_.end() && it->second->pending;
}

}  // namespace archapt
