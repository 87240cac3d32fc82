#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "archapt/counters.hpp"
#include "archapt/nvm_cache.hpp"
#include "archapt/pool.hpp"

namespace archapt {

enum class LogType : uint8_t {
  UndoValue = 1,    // payload holds the pre-write value
  RedoValue = 2,    // payload holds the new value
  LogicalMarker = 3,
  PhysicalMarker = 4,  // payload lists the transaction's committed writes
};

enum class TxnMode : uint8_t { Undo = 0, Redo = 1 };

struct MarkerEntry {
  uint64_t addr;
  uint32_t len;
  uint64_t seq;
};

struct LogRecordInfo {
  LogType type = LogType::UndoValue;
  TxnMode mode = TxnMode::Undo;
  uint64_t txn_id = 0;
  uint64_t seq = 0;
  uint64_t target_addr = 0;
  uint64_t payload_addr = 0;
  uint32_t payload_len = 0;
  uint16_t entry_count = 0;
  uint32_t desc_index = 0;
};

// Persisted log records. A record is a fixed 64-byte descriptor in a flat
// table plus an optional payload allocation in the log pool; both are always
// flushed, never deferred. Payload flushes count as log work (marker class
// for marker payloads); descriptor flushes count as metadata. Value payloads
// are freed eagerly at physical commit, markers stay until recovery clears
// them, so the descriptor table scan is the authoritative crash-time
// transaction history.
class LogManager {
 public:
  LogManager(NvmCache& mem, PoolSet& pools, RuntimeCounters* rc = nullptr);

  LogRecordInfo append_value(LogType type, TxnMode mode, uint64_t txn, uint64_t seq,
                             uint64_t target_addr, std::span<const uint8_t> value);
  LogRecordInfo append_marker(LogType type, TxnMode mode, uint64_t txn, uint64_t seq,
                              const std::vector<MarkerEntry>& entries);

  // free the payload and void the descriptor
  void void_record(const LogRecordInfo& rec);

  // all live (non-voided) records in descriptor order; framing errors throw
  std::vector<LogRecordInfo> scan() const;
  std::vector<uint8_t> payload(const LogRecordInfo& rec) const;
  std::vector<MarkerEntry> entries(const LogRecordInfo& rec) const;

  // continue appending after the existing table (post-crash)
  void seek_end();

  uint64_t capacity_records() const { return slots_; }

 private:
  LogRecordInfo append(LogType type, TxnMode mode, uint64_t txn, uint64_t seq,
                       uint64_t target_addr, std::span<const uint8_t> payload,
                       uint16_t entry_count, FlushClass payload_class);
  uint64_t desc_addr(uint32_t index) const;

  NvmCache& mem_;
  PoolSet& pools_;
  RuntimeCounters* rc_;
  uint64_t base_;
  uint64_t slots_;
  uint64_t next_ = 0;
};

}  // namespace archapt
