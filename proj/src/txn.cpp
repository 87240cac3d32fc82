#include "archapt/txn.hpp"

#include <algorithm>
#include <cassert>

namespace archapt {

TxnRuntime::TxnRuntime(NvmCache& mem, PoolSet& pools, PersistUnit& persist,
                       LocalityTracker& tracker, RuntimeCounters& rc)
    : mem_(mem), pools_(pools), persist_(persist), tracker_(tracker), rc_(rc),
      log_(mem, pools, &rc) {
  log_.seek_end();
  tracker_.set_callbacks(
      [this](const TrackedObject& obj, uint64_t owner) {
        // estimated resident: finish the pending flush for the prior write
        ObjectRef ref{obj.id, obj.addr, obj.size};
        flush_object(ref);
        classified_fence(mem_, &rc_, FlushClass::Object);
        persist_.fold_range(obj.addr, obj.size);
        rc_.resolved_completed++;
        resolve_pending(owner, obj.id, ResolveHow::Flushed);
      },
      [this](const TrackedObject& obj, uint64_t owner, bool drained) {
        // estimated evicted: skip the flush, protect with checksums instead
        mem_.note_skipped_flush(obj.blocks);
        rc_.object_flushes_skipped += obj.blocks;
        if (drained)
          rc_.resolved_skip_drain++;
        else
          rc_.resolved_skip_evict++;
        persist_.fold_range(obj.addr, obj.size);
        resolve_pending(owner, obj.id, ResolveHow::SkippedWithChecksum);
      });
}

TxnRuntime::Txn& TxnRuntime::get(uint64_t id) {
  auto it = txns_.find(id);
  if (it == txns_.end()) throw UsageError("unknown transaction " + std::to_string(id));
  return it->second;
}

const TxnRuntime::Txn& TxnRuntime::get(uint64_t id) const {
  return const_cast<TxnRuntime*>(this)->get(id);
}

void TxnRuntime::require_live_object(const ObjectRef& obj) const {
  if (obj.size == 0 || !pools_.is_live(obj.addr))
    throw UsageError("write to unknown object at " + std::to_string(obj.addr));
}

uint64_t TxnRuntime::tx_start(TxnMode mode, bool archapt_enabled) {
  uint64_t id = next_txn_++;
  txns_.emplace(id, Txn{id, mode, archapt_enabled, TxnState::Active, {}, {}});
  rc_.txn_started++;
  return id;
}

void TxnRuntime::flush_object(const ObjectRef& obj) {
  for (uint64_t b = block_base(obj.addr); b < obj.addr + obj.size; b += kBlockSize)
    classified_flush(mem_, &rc_, FlushClass::Object, b);
}

void TxnRuntime::defer_or_flush(Txn& t, const ObjectRef& obj) {
  if (t.archapt) {
    // decision already registered with the tracker by the caller
    t.pending_objs.insert(obj.id);
    rc_.writes_deferred++;
  } else {
    flush_object(obj);
    classified_fence(mem_, &rc_, FlushClass::Object);
    persist_.fold_range(obj.addr, obj.size);
  }
}

void TxnRuntime::tx_write(uint64_t txn, const ObjectRef& obj, std::span<const uint8_t> value) {
  Txn& t = get(txn);
  if (t.state != TxnState::Active) throw StateError("write on a non-active transaction");
  require_live_object(obj);
  if (value.size() != obj.size) throw UsageError("value size does not match object size");

  Write w;
  w.obj = obj;
  w.new_value.assign(value.begin(), value.end());
  w.seq = next_seq_++;

  if (t.mode == TxnMode::Undo) {
    w.old_value = mem_.load(obj.addr, obj.size);
    w.record = log_.append_value(LogType::UndoValue, t.mode, t.id, w.seq, obj.addr,
                                 w.old_value);
    classified_fence(mem_, &rc_, FlushClass::Log);
    if (t.archapt) tracker_.record_access({obj.id, obj.addr, obj.size, obj.blocks()}, true, t.id);
    mem_.store(obj.addr, value);
    defer_or_flush(t, obj);
  } else {
    // redo: log the new value now, apply at logical commit; the covering
    // fence is deferred to sync()
    w.record = log_.append_value(LogType::RedoValue, t.mode, t.id, w.seq, obj.addr, value);
    unfenced_log_flushes_ = true;
  }
  t.writes.push_back(std::move(w));
}

std::vector<uint8_t> TxnRuntime::tx_read(uint64_t txn, const ObjectRef& obj) {
  Txn& t = get(txn);
  if (t.state != TxnState::Active) throw StateError("read on a non-active transaction");
  if (t.mode == TxnMode::Redo) {
    for (auto it = t.writes.rbegin(); it != t.writes.rend(); ++it)
      if (it->obj.id == obj.id) return it->new_value;
  }
  if (t.archapt) tracker_.record_access({obj.id, obj.addr, obj.size, obj.blocks()}, false, t.id);
  return mem_.load(obj.addr, obj.size);
}

void TxnRuntime::tx_lcommit(uint64_t txn) {
  Txn& t = get(txn);
  if (t.state != TxnState::Active) throw StateError("lcommit on a non-active transaction");

  if (t.mode == TxnMode::Redo) {
    for (Write& w : t.writes) {
      if (t.archapt)
        tracker_.record_access({w.obj.id, w.obj.addr, w.obj.size, w.obj.blocks()}, true, t.id);
      mem_.store(w.obj.addr, w.new_value);
      defer_or_flush(t, w.obj);
    }
  }

  rc_.txn_lcommitted++;
  if (t.writes.empty()) {
    // read-only: nothing to make durable
    t.state = TxnState::PhysicallyCommitted;
    rc_.txn_pcommitted++;
    return;
  }

  log_.append_marker(LogType::LogicalMarker, t.mode, t.id, next_seq_++, {});
  classified_fence(mem_, &rc_, FlushClass::Marker);
  t.state = TxnState::LogicallyCommitted;
  if (t.pending_objs.empty()) physical_commit(t);
}

void TxnRuntime::physical_commit(Txn& t) {
  assert(t.state == TxnState::LogicallyCommitted && t.pending_objs.empty());
  std::vector<MarkerEntry> entries;
  entries.reserve(t.writes.size());
  for (const Write& w : t.writes) entries.push_back({w.obj.addr, w.obj.size, w.seq});
  log_.append_marker(LogType::PhysicalMarker, t.mode, t.id, next_seq_++, entries);
  classified_fence(mem_, &rc_, FlushClass::Marker);
  t.state = TxnState::PhysicallyCommitted;
  rc_.txn_pcommitted++;
  // value records are no longer needed; markers stay for recovery
  for (Write& w : t.writes)
    if (w.record) {
      log_.void_record(*w.record);
      w.record.reset();
    }
}

void TxnRuntime::tx_end(uint64_t txn) {
  Txn& t = get(txn);
  if (t.state == TxnState::Active) tx_lcommit(txn);
}

void TxnRuntime::tx_abort(uint64_t txn) {
  Txn& t = get(txn);
  if (t.state != TxnState::Active) throw StateError("abort on a non-active transaction");

  if (t.mode == TxnMode::Undo) {
    for (uint64_t oid : t.pending_objs) tracker_.cancel_pending(oid, t.id);
    rc_.cancelled_by_abort += t.pending_objs.size();
    t.pending_objs.clear();
    for (auto it = t.writes.rbegin(); it != t.writes.rend(); ++it) {
      mem_.store(it->obj.addr, it->old_value);
      flush_object(it->obj);
      persist_.fold_range(it->obj.addr, it->obj.size);
    }
    if (!t.writes.empty()) classified_fence(mem_, &rc_, FlushClass::Object);
  }
  for (Write& w : t.writes)
    if (w.record) {
      log_.void_record(*w.record);
      w.record.reset();
    }
  t.state = TxnState::Aborted;
  rc_.txn_aborted++;
}

void TxnRuntime::sync() {
  if (unfenced_log_flushes_) {
    classified_fence(mem_, &rc_, FlushClass::Log);
    unfenced_log_flushes_ = false;
  }
}

void TxnRuntime::drain(uint64_t txn) {
  Txn& t = get(txn);
  if (t.state != TxnState::LogicallyCommitted && t.state != TxnState::PhysicallyCommitted)
    throw StateError("drain before logical commit");
  tracker_.drain(txn);
}

void TxnRuntime::drain_all() { tracker_.drain_all(); }

void TxnRuntime::resolve_pending(uint64_t txn, uint64_t object_id, ResolveHow) {
  Txn& t = get(txn);
  if (t.pending_objs.erase(object_id) == 0)
    throw InternalError("resolution for an object with no pending flush");
  if (t.state == TxnState::LogicallyCommitted && t.pending_objs.empty()) physical_commit(t);
}

TxnState TxnRuntime::state(uint64_t txn) const { return get(txn).state; }

uint64_t TxnRuntime::pending_count(uint64_t txn) const { return get(txn).pending_objs.size(); }

}  // namespace archapt
