#pragma once

#include <cstdint>

#include "archapt/nvm_cache.hpp"

namespace archapt {

// Flush and barrier accounting broken down by what was persisted. The
// emulator totals in FlushCounters cover everything; these classes let a
// run report object/log work separately from commit markers, checksum
// blocks and allocator metadata.
enum class FlushClass { Object, Log, Marker, Checksum, Metadata };

struct RuntimeCounters {
  uint64_t object_flushes = 0;
  uint64_t log_flushes = 0;
  uint64_t marker_flushes = 0;
  uint64_t checksum_flushes = 0;
  uint64_t metadata_flushes = 0;
  uint64_t object_flushes_skipped = 0;  // blocks

  uint64_t data_barriers = 0;    // fences ordering object/log persistence
  uint64_t marker_barriers = 0;  // fences around commit markers

  uint64_t object_dirty_bytes = 0;  // dirtiness of object-class flushes
  uint64_t object_lines = 0;

  // pending-flush resolution audit
  uint64_t writes_deferred = 0;
  uint64_t resolved_completed = 0;
  uint64_t resolved_skip_evict = 0;
  uint64_t resolved_skip_drain = 0;
  uint64_t cancelled_by_abort = 0;

  uint64_t txn_started = 0;
  uint64_t txn_lcommitted = 0;
  uint64_t txn_pcommitted = 0;
  uint64_t txn_aborted = 0;

  uint64_t data_flushes() const { return object_flushes + log_flushes; }
  double object_avg_dirtiness() const {
    return object_lines == 0
               ? 0.0
               : double(object_dirty_bytes) / (double(kBlockSize) * double(object_lines));
  }
};

inline FlushResult classified_flush(NvmCache& mem, RuntimeCounters* rc, FlushClass cls,
                                    uint64_t addr) {
  FlushResult r = mem.flush_line(addr);
  if (rc) {
    switch (cls) {
      case FlushClass::Object:
        rc->object_flushes++;
        if (r.wrote_back) {
          rc->object_lines++;
          rc->object_dirty_bytes += r.dirty_bytes;
        }
        break;
      case FlushClass::Log: rc->log_flushes++; break;
      case FlushClass::Marker: rc->marker_flushes++; break;
      case FlushClass::Checksum: rc->checksum_flushes++; break;
      case FlushClass::Metadata: rc->metadata_flushes++; break;
    }
  }
  return r;
}

inline void classified_fence(NvmCache& mem, RuntimeCounters* rc, FlushClass cls) {
  mem.fence();
  if (rc) {
    if (cls == FlushClass::Marker)
      rc->marker_barriers++;
    else
      rc->data_barriers++;
  }
}

}  // namespace archapt
