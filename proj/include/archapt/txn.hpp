#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "archapt/counters.hpp"
#include "archapt/log.hpp"
#include "archapt/nvm_cache.hpp"
#include "archapt/persist.hpp"
#include "archapt/pool.hpp"
#include "archapt/tracker.hpp"

namespace archapt {

enum class TxnState { Active, LogicallyCommitted, PhysicallyCommitted, Aborted };

struct ObjectRef {
  uint64_t id = 0;
  uint64_t addr = 0;
  uint32_t size = 0;

  uint32_t blocks() const {
    return size == 0 ? 0
                     : uint32_t((addr + size - 1) / kBlockSize - addr / kBlockSize + 1);
  }
};

// Undo/redo logging transactions over the emulated persistent memory.
//
// Undo mode persists the old value to the log, updates in place and flushes
// the object (one log flush + fence and one object flush + fence per write).
// Redo mode logs the new value without a fence and applies it at logical
// commit; the fence covering those log flushes is issued once per batch via
// sync(). With the architecture-aware path enabled, object flushes are not
// issued at write time: the locality tracker either completes them on reuse
// or skips them at queue eviction, where the page checksums take over.
//
// A transaction is logically committed once its operations are done and the
// marker is durable, and physically committed once every deferred object
// flush has been completed or skipped-with-checksums; only then are its
// value log records reclaimed.
class TxnRuntime {
 public:
  TxnRuntime(NvmCache& mem, PoolSet& pools, PersistUnit& persist, LocalityTracker& tracker,
             RuntimeCounters& rc);

  uint64_t tx_start(TxnMode mode, bool archapt_enabled);
  void tx_write(uint64_t txn, const ObjectRef& obj, std::span<const uint8_t> value);
  std::vector<uint8_t> tx_read(uint64_t txn, const ObjectRef& obj);
  void tx_lcommit(uint64_t txn);
  void tx_end(uint64_t txn);  // lcommit if still active
  void tx_abort(uint64_t txn);

  // fence covering asynchronously issued redo log flushes; call at batch end
  void sync();

  void drain(uint64_t txn);
  void drain_all();

  void resolve_pending(uint64_t txn, uint64_t object_id, ResolveHow how);

  TxnState state(uint64_t txn) const;
  uint64_t pending_count(uint64_t txn) const;
  uint64_t next_seq() const { return next_seq_; }
  void set_next_ids(uint64_t next_txn, uint64_t next_seq) {
    next_txn_ = next_txn;
    next_seq_ = next_seq;
  }

  LogManager& log() { return log_; }
  RuntimeCounters& counters() { return rc_; }

 private:
  struct Write {
    ObjectRef obj;
    std::vector<uint8_t> old_value;
    std::vector<uint8_t> new_value;
    uint64_t seq = 0;
    std::optional<LogRecordInfo> record;
  };

  struct Txn {
    uint64_t id;
    TxnMode mode;
    bool archapt;
    TxnState state = TxnState::Active;
    std::vector<Write> writes;
    std::set<uint64_t> pending_objs;
  };

  Txn& get(uint64_t id);
  const Txn& get(uint64_t id) const;
  void require_live_object(const ObjectRef& obj) const;
  void flush_object(const ObjectRef& obj);         // object-class flush of all blocks
  void defer_or_flush(Txn& t, const ObjectRef& obj);
  void physical_commit(Txn& t);

  NvmCache& mem_;
  PoolSet& pools_;
  PersistUnit& persist_;
  LocalityTracker& tracker_;
  RuntimeCounters& rc_;
  LogManager log_;
  std::unordered_map<uint64_t, Txn> txns_;
  uint64_t next_txn_ = 1;
  uint64_t next_seq_ = 1;
  bool unfenced_log_flushes_ = false;
};

}  // namespace archapt
