#include "archapt/pool.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>

#include "archapt/persist.hpp"

namespace archapt {

using namespace layout;

namespace {

constexpr uint32_t kSlotBytes = 16;

// slot flags
constexpr uint32_t kFlagUsed = 1u << 0;
constexpr uint32_t kFlagLive = 1u << 1;
constexpr uint32_t kKindShift = 2;       // 2 bits
constexpr uint32_t kPairShift = 4;       // 0 single, 1 first, 2 second

uint32_t blocks_touched(uint64_t addr, uint32_t size) {
  if (size == 0) return 0;
  return uint32_t((addr + size - 1) / kBlockSize - addr / kBlockSize + 1);
}

// footprint the placement consumes: whole columns for wide objects,
// otherwise the blocks the bytes cover from an aligned start
uint32_t region_blocks_for(uint32_t size) {
  if (size > kColumnBytes) {
    uint32_t cols = uint32_t((size + kColumnBytes - 1) / kColumnBytes);
    return cols * kRows;
  }
  return uint32_t((size + kBlockSize - 1) / kBlockSize);
}

void put_u64(uint8_t* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = uint8_t(v >> (8 * i));
}
void put_u32(uint8_t* p, uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = uint8_t(v >> (8 * i));
}
uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
  return v;
}
uint32_t get_u32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
  return v;
}

// regions are byte-contiguous whether in-column or spanning whole columns
uint64_t region_end(uint64_t addr, uint32_t region_blocks) {
  return addr + uint64_t(region_blocks) * kBlockSize;
}

}  // namespace

PoolSet::PoolSet(NvmCache& mem, const PoolConfig& cfg, PersistUnit* persist, RuntimeCounters* rc)
    : mem_(mem), persist_(persist), rc_(rc), cfg_(cfg) {
  if (cfg.key_pool_bytes < kPageSize || cfg.field_value_pool_bytes < kPageSize ||
      cfg.log_pool_bytes < kPageSize)
    throw ConfigError("every pool needs at least one 4KB page");
  if (cfg.metadata_bytes < kSlotBytes) throw ConfigError("metadata region too small");
  if (cfg.base % kPageSize != 0) throw ConfigError("pool base must be page-aligned");

  meta_base_ = cfg.base;
  meta_slots_ = cfg.metadata_bytes / kSlotBytes;
  uint64_t at = cfg.base + ((cfg.metadata_bytes + kPageSize - 1) / kPageSize) * kPageSize;
  log_desc_base_ = at;
  at += ((cfg.log_descriptor_bytes + kPageSize - 1) / kPageSize) * kPageSize;
  const uint64_t sizes[3] = {cfg.key_pool_bytes, cfg.field_value_pool_bytes, cfg.log_pool_bytes};
  for (int i = 0; i < 3; ++i) {
    pools_[i].kind = PoolKind(i);
    pools_[i].base = at;
    pools_[i].pages = sizes[i] / kPageSize;
    at += pools_[i].pages * kPageSize;
  }
  if (at > mem.capacity()) throw ConfigError("pools exceed NVM capacity");
  if (persist_) {
    persist_->register_region(pools_[0].base, pools_[0].pages * kPageSize);
    persist_->register_region(pools_[1].base, pools_[1].pages * kPageSize);
  }
}

uint64_t PoolSet::end() const { return pools_[2].base + pools_[2].pages * kPageSize; }

bool PoolSet::checksum_protected(uint64_t addr) const {
  for (int i = 0; i < 2; ++i)
    if (addr >= pools_[i].base && addr < pools_[i].base + pools_[i].pages * kPageSize) return true;
  return false;
}

void PoolSet::advance_column(Pool& p) {
  p.cur_off = 0;
  if (++p.cur_col >= kCols) {
    p.cur_col = 0;
    p.cur_page++;
  }
}

uint64_t PoolSet::place(Pool& p, uint32_t size) {
  uint32_t region = region_blocks_for(size);
  auto& fl = p.free_by_blocks[region];
  if (!fl.empty()) {
    uint64_t addr = fl.back();
    fl.pop_back();
    return addr;
  }
  if (size > kColumnBytes) {
    uint32_t cols = uint32_t((size + kColumnBytes - 1) / kColumnBytes);
    if (p.cur_off > 0) advance_column(p);
    if (p.cur_col + cols > kCols) {
      p.cur_col = 0;
      p.cur_off = 0;
      p.cur_page++;
    }
    if (p.cur_page >= p.pages) throw OutOfMemoryError("pool exhausted");
    uint64_t addr = p.base + uint64_t(p.cur_page) * kPageSize + uint64_t(p.cur_col) * kColumnBytes;
    p.cur_col += cols;
    p.cur_off = 0;
    if (p.cur_col >= kCols) {
      p.cur_col = 0;
      p.cur_page++;
    }
    return addr;
  }
  uint32_t need = region * uint32_t(kBlockSize);
  if (need > kColumnBytes - p.cur_off) advance_column(p);
  if (p.cur_page >= p.pages) throw OutOfMemoryError("pool exhausted");
  uint64_t addr = p.base + uint64_t(p.cur_page) * kPageSize + uint64_t(p.cur_col) * kColumnBytes +
                  p.cur_off;
  p.cur_off += need;
  if (p.cur_off >= kColumnBytes) advance_column(p);
  return addr;
}

uint32_t PoolSet::append_slot(uint64_t addr, uint32_t size, PoolKind kind, uint8_t pair_role) {
  if (next_slot_ >= meta_slots_) throw OutOfMemoryError("allocation metadata table full");
  uint32_t slot = uint32_t(next_slot_++);
  uint8_t buf[kSlotBytes];
  put_u64(buf, addr);
  put_u32(buf + 8, size);
  put_u32(buf + 12, kFlagUsed | kFlagLive | (uint32_t(kind) << kKindShift) |
                        (uint32_t(pair_role) << kPairShift));
  mem_.store(meta_base_ + uint64_t(slot) * kSlotBytes, buf);
  classified_flush(mem_, rc_, FlushClass::Metadata, meta_base_ + uint64_t(slot) * kSlotBytes);
  return slot;
}

void PoolSet::mark_slot_freed(uint32_t slot) {
  uint64_t addr = meta_base_ + uint64_t(slot) * kSlotBytes;
  std::vector<uint8_t> buf = mem_.peek(addr, kSlotBytes);
  uint32_t flags = get_u32(buf.data() + 12);
  put_u32(buf.data() + 12, flags & ~kFlagLive);
  mem_.store(addr, buf);
  classified_flush(mem_, rc_, FlushClass::Metadata, addr);
}

Allocation PoolSet::pmalloc(PoolKind kind, uint32_t size) {
  if (size == 0 || size > kMaxAlloc)
    throw AllocError("allocation size out of range: " + std::to_string(size));
  Pool& p = pools_[size_t(kind)];
  uint64_t addr = place(p, size);
  uint32_t slot = append_slot(addr, size, kind, 0);
  live_[addr] = Live{size, kind, addr, region_blocks_for(size), 0, slot};
  return Allocation{addr, size, blocks_touched(addr, size), kind};
}

std::pair<Allocation, Allocation> PoolSet::pmalloc_pair(uint32_t field_size,
                                                        uint32_t value_size) {
  if (field_size == 0 || value_size == 0 || field_size + value_size > kMaxAlloc)
    throw AllocError("pair sizes out of range");
  uint32_t combined = field_size + value_size;
  Pool& p = pools_[size_t(PoolKind::FieldValue)];
  uint64_t addr = place(p, combined);
  uint32_t region = region_blocks_for(combined);
  uint32_t s1 = append_slot(addr, field_size, PoolKind::FieldValue, 1);
  uint32_t s2 = append_slot(addr + field_size, value_size, PoolKind::FieldValue, 2);
  live_[addr] = Live{field_size, PoolKind::FieldValue, addr, region, addr + field_size, s1};
  live_[addr + field_size] =
      Live{value_size, PoolKind::FieldValue, addr, region, addr, s2};
  Allocation field{addr, field_size, blocks_touched(addr, field_size), PoolKind::FieldValue};
  Allocation value{addr + field_size, value_size, blocks_touched(addr + field_size, value_size),
                   PoolKind::FieldValue};
  return {field, value};
}

void PoolSet::zero_region(uint64_t addr, uint32_t size) {
  std::vector<uint8_t> zeros(size, 0);
  mem_.store(addr, zeros);
  for (uint64_t b = block_base(addr); b < addr + size; b += kBlockSize)
    classified_flush(mem_, rc_, FlushClass::Metadata, b);
  if (persist_) persist_->fold_range(addr, size);
}

void PoolSet::pfree(const Allocation& a) {
  auto it = live_.find(a.addr);
  if (it == live_.end()) throw UsageError("free of unknown or already freed allocation");
  Live info = it->second;
  zero_region(a.addr, info.size);
  mark_slot_freed(info.slot);
  live_.erase(it);
  bool recycle = true;
  if (info.partner != 0 && live_.count(info.partner)) recycle = false;
  if (recycle) {
    Pool& p = pools_[size_t(info.pool)];
    p.free_by_blocks[info.region_blocks].push_back(info.region_addr);
  }
}

std::optional<Allocation> PoolSet::find_alloc(uint64_t addr) const {
  auto it = live_.find(addr);
  if (it == live_.end()) return std::nullopt;
  return Allocation{addr, it->second.size, blocks_touched(addr, it->second.size),
                    it->second.pool};
}

std::vector<Allocation> PoolSet::live_allocations() const {
  std::vector<Allocation> out;
  out.reserve(live_.size());
  for (auto& [addr, info] : live_)
    out.push_back({addr, info.size, blocks_touched(addr, info.size), info.pool});
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.addr < b.addr; });
  return out;
}

void PoolSet::rebuild_from_metadata() {
  live_.clear();
  for (Pool& p : pools_) {
    p.cur_page = 0;
    p.cur_col = 0;
    p.cur_off = 0;
    for (auto& fl : p.free_by_blocks) fl.clear();
  }

  struct SlotRec {
    uint64_t addr;
    uint32_t size;
    uint32_t flags;
  };
  std::vector<SlotRec> slots;
  for (uint64_t i = 0; i < meta_slots_; ++i) {
    std::vector<uint8_t> buf = mem_.peek(meta_base_ + i * kSlotBytes, kSlotBytes);
    uint32_t flags = get_u32(buf.data() + 12);
    if (!(flags & kFlagUsed)) break;
    slots.push_back({get_u64(buf.data()), get_u32(buf.data() + 8), flags});
  }
  next_slot_ = slots.size();

  // replay in slot order: a region reappearing after a free was recycled,
  // anything else advances the bump cursor
  std::array<std::unordered_map<uint64_t, uint32_t>, 3> free_set;  // addr -> region blocks
  std::array<uint64_t, 3> high_water = {pools_[0].base, pools_[1].base, pools_[2].base};

  for (size_t i = 0; i < slots.size(); ++i) {
    const SlotRec& s = slots[i];
    PoolKind kind = PoolKind((s.flags >> kKindShift) & 3);
    uint8_t pair = uint8_t((s.flags >> kPairShift) & 3);
    size_t pi = size_t(kind);

    uint64_t region_addr = s.addr;
    uint32_t region = 0;
    if (pair == 1 && i + 1 < slots.size()) {
      const SlotRec& s2 = slots[i + 1];
      region = region_blocks_for(s.size + s2.size);
      bool live1 = s.flags & kFlagLive, live2 = s2.flags & kFlagLive;
      auto fit = free_set[pi].find(region_addr);
      if (fit != free_set[pi].end())
        free_set[pi].erase(fit);
      else
        high_water[pi] = std::max(high_water[pi], region_end(region_addr, region));
      if (live1)
        live_[s.addr] = Live{s.size, kind, region_addr, region, live2 ? s2.addr : 0, uint32_t(i)};
      if (live2)
        live_[s2.addr] =
            Live{s2.size, kind, region_addr, region, live1 ? s.addr : 0, uint32_t(i + 1)};
      if (!live1 && !live2) free_set[pi][region_addr] = region;
      ++i;
      continue;
    }
    region = region_blocks_for(s.size);
    auto fit = free_set[pi].find(region_addr);
    if (fit != free_set[pi].end())
      free_set[pi].erase(fit);
    else
      high_water[pi] = std::max(high_water[pi], region_end(region_addr, region));
    if (s.flags & kFlagLive)
      live_[s.addr] = Live{s.size, kind, region_addr, region, 0, uint32_t(i)};
    else
      free_set[pi][region_addr] = region;
  }

  for (size_t pi = 0; pi < 3; ++pi) {
    Pool& p = pools_[pi];
    uint64_t rel = high_water[pi] - p.base;
    p.cur_page = uint32_t(rel / kPageSize);
    uint64_t in_page = rel % kPageSize;
    if (in_page >= kDataBytes) {
      p.cur_page++;
      in_page = 0;
    }
    p.cur_col = uint32_t(in_page / kColumnBytes);
    p.cur_off = uint32_t(in_page % kColumnBytes);
    for (auto& [addr, region] : free_set[pi]) p.free_by_blocks[region].push_back(addr);
    for (auto& fl : p.free_by_blocks) std::sort(fl.begin(), fl.end());
  }
}

}  // namespace archapt
