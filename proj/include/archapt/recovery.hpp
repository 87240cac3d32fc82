#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "archapt/log.hpp"
#include "archapt/nvm_cache.hpp"
#include "archapt/persist.hpp"
#include "archapt/pool.hpp"

namespace archapt {

struct RecoveryOptions {
  // Redo transactions that reached logical commit have their full intent
  // durably logged; replaying the log completes them. When disabled they are
  // cancelled instead, which for redo means the in-place applies can only be
  // repaired by the checksums.
  bool rollforward_redo_logical = true;
};

struct TxnClassification {
  std::vector<uint64_t> physical;
  std::vector<uint64_t> logical_only;
  std::vector<uint64_t> active;
};

struct RecoveryReport {
  uint64_t inconsistent_objects = 0;  // I-obj: ground truth, filled by the harness
  uint64_t detected = 0;              // DI-obj
  uint64_t corrected = 0;             // objects repaired (= detected - uncorrectable)
  uint64_t uncorrectable = 0;         // CC-obj
  std::vector<uint64_t> rolled_back;
  std::vector<uint64_t> committed;

  uint64_t corrected_blocks = 0;
  uint64_t uncorrectable_blocks = 0;
  uint64_t pages_verified = 0;
  uint64_t pages_flagged = 0;
  uint64_t max_seq = 0;
  uint64_t max_txn = 0;

  std::string to_json() const;
};

TxnClassification classify_txns(const std::vector<LogRecordInfo>& records);

// Post-crash processing over the durable image behind `mem` (cache empty):
// rebuild the allocator, verify and repair every checksum-protected page,
// then resolve unfinished transactions from their logs — undo logs restore
// pre-transaction values, redo logs complete logically committed
// transactions (default) — oldest-wins ordering guarded by the committed
// write sequences recorded in physical-commit markers. Clears the log
// region and leaves the folded shadow equal to the durable image.
RecoveryReport recover(NvmCache& mem, PoolSet& pools, PersistUnit& persist,
                       RuntimeCounters* rc = nullptr, const RecoveryOptions& opt = {});

}  // namespace archapt
