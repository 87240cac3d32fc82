#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "archapt/checksum.hpp"
#include "archapt/counters.hpp"
#include "archapt/nvm_cache.hpp"

namespace archapt {

class PersistUnit;

enum class PoolKind : uint8_t { Key = 0, FieldValue = 1, Log = 2 };

struct PoolConfig {
  uint64_t key_pool_bytes = 4 << 20;
  uint64_t field_value_pool_bytes = 16 << 20;
  uint64_t log_pool_bytes = 16 << 20;
  uint64_t metadata_bytes = 8 << 20;        // allocation slot table
  uint64_t log_descriptor_bytes = 8 << 20;  // log record descriptor table
  uint64_t base = 0;  // start of the carved region inside the NVM image
};

struct Allocation {
  uint64_t addr = 0;
  uint32_t size = 0;
  uint32_t blocks = 0;  // 64-byte blocks the bytes touch
  PoolKind pool = PoolKind::Key;
};

// Pre-allocated pools that bump-allocate column-wise through virtual-matrix
// pages. Every allocation starts block-aligned, never crosses the page's
// data/checksum boundary, and objects wider than one column take whole
// consecutive columns of a single page. Freed regions are zeroed and
// recycled by block-count class. Allocation metadata (a flat slot table plus
// per-pool cursors) is persisted and always flushed so recovery can rebuild
// the allocator and enumerate live objects.
class PoolSet {
 public:
  PoolSet(NvmCache& mem, const PoolConfig& cfg, PersistUnit* persist = nullptr,
          RuntimeCounters* rc = nullptr);

  Allocation pmalloc(PoolKind kind, uint32_t size);
  std::pair<Allocation, Allocation> pmalloc_pair(uint32_t field_size, uint32_t value_size);
  void pfree(const Allocation& a);

  bool is_live(uint64_t addr) const { return live_.count(addr) != 0; }
  std::optional<Allocation> find_alloc(uint64_t addr) const;
  std::vector<Allocation> live_allocations() const;  // sorted by address

  uint64_t pool_base(PoolKind kind) const { return pools_[size_t(kind)].base; }
  uint64_t pool_pages(PoolKind kind) const { return pools_[size_t(kind)].pages; }
  uint64_t log_descriptor_base() const { return log_desc_base_; }
  uint64_t log_descriptor_bytes() const { return cfg_.log_descriptor_bytes; }
  uint64_t end() const;  // first byte past the carved region

  // pools whose pages carry checksums (key and field-value)
  bool checksum_protected(uint64_t addr) const;

  // Rebuild cursors, free lists and the live table by replaying the
  // persisted slot table. Used after a crash.
  void rebuild_from_metadata();

  static constexpr uint32_t kMaxAlloc = uint32_t(layout::kDataBytes);

 private:
  struct Pool {
    PoolKind kind;
    uint64_t base = 0;
    uint64_t pages = 0;
    uint32_t cur_page = 0;
    uint32_t cur_col = 0;
    uint32_t cur_off = 0;  // within the current column
    std::array<std::vector<uint64_t>, 50> free_by_blocks;
  };

  struct Live {
    uint32_t size;
    PoolKind pool;
    uint64_t region_addr;    // start of the placement region (pair-shared)
    uint32_t region_blocks;  // whole region footprint in blocks
    uint64_t partner = 0;    // other half of a pair, 0 if single
    uint32_t slot;
  };

  uint64_t place(Pool& p, uint32_t size);     // bump or recycle, returns addr
  void advance_column(Pool& p);
  uint32_t append_slot(uint64_t addr, uint32_t size, PoolKind kind, uint8_t pair_role);
  void mark_slot_freed(uint32_t slot);
  void zero_region(uint64_t addr, uint32_t size);

  NvmCache& mem_;
  PersistUnit* persist_;
  RuntimeCounters* rc_;
  PoolConfig cfg_;
  uint64_t meta_base_ = 0;
  uint64_t meta_slots_ = 0;
  uint64_t next_slot_ = 0;
  uint64_t log_desc_base_ = 0;
  std::array<Pool, 3> pools_;
  std::unordered_map<uint64_t, Live> live_;
};

}  // namespace archapt
