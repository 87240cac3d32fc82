#include "archapt/persist.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>

namespace archapt {

using namespace layout;

void PersistUnit::register_region(uint64_t base, uint64_t bytes) {
  if (base % kPageSize != 0 || bytes % kPageSize != 0)
    throw ConfigError("protected region must be page-aligned");
  regions_.push_back({base, bytes, std::vector<uint8_t>(bytes, 0)});
}

int PersistUnit::shadow_index(uint64_t addr) const {
  for (size_t i = 0; i < regions_.size(); ++i)
    if (addr >= regions_[i].base && addr < regions_[i].base + regions_[i].bytes) return int(i);
  return -1;
}

uint64_t PersistUnit::fold_range(uint64_t addr, uint64_t len) {
  if (len == 0) return 0;
  int ri = shadow_index(addr);
  if (ri < 0) return 0;
  Region& reg = regions_[size_t(ri)];
  assert(addr + len <= reg.base + reg.bytes);

  // accumulate deltas per checksum block; shadow advances as we go
  std::map<uint64_t, ChecksumBlock> deltas;
  uint64_t pos = addr;
  while (pos < addr + len) {
    uint64_t block_addr = block_base(pos);
    uint64_t take = std::min<uint64_t>(block_addr + kBlockSize - pos, addr + len - pos);
    uint64_t page = page_base(block_addr);
    uint64_t data_off = block_addr - page;
    assert(data_off < kDataBytes);

    uint8_t* shadow = reg.shadow.data() + (block_addr - reg.base);
    ChecksumBlock old_block = ChecksumBlock::from_bytes({shadow, kBlockSize});
    mem_.peek(pos, {shadow + (pos - block_addr), take});
    ChecksumBlock new_block = ChecksumBlock::from_bytes({shadow, kBlockSize});
    ChecksumBlock delta = new_block - old_block;
    if (!delta.is_zero()) {
      deltas[page + cons_block_offset(column_of(data_off))] += delta;
      deltas[page + corr_block_offset(row_of(data_off))] += delta;
    }
    pos += take;
  }

  uint64_t flushed = 0;
  std::array<uint8_t, kBlockSize> buf;
  for (auto& [cs_addr, delta] : deltas) {
    ChecksumBlock cur = ChecksumBlock::from_bytes(mem_.peek(cs_addr, kBlockSize));
    (cur + delta).to_bytes(buf);
    mem_.store(cs_addr, buf);
    classified_flush(mem_, rc_, FlushClass::Checksum, cs_addr);
    flushed++;
  }
  return flushed;
}

std::vector<uint8_t> PersistUnit::shadow_copy(uint64_t addr, uint64_t len) const {
  int ri = shadow_index(addr);
  if (ri < 0) throw RangeError("address not in a protected region");
  const Region& reg = regions_[size_t(ri)];
  assert(addr + len <= reg.base + reg.bytes);
  const uint8_t* p = reg.shadow.data() + (addr - reg.base);
  return std::vector<uint8_t>(p, p + len);
}

void PersistUnit::rebuild_from_image() {
  for (Region& reg : regions_) {
    std::span<const uint8_t> img = mem_.image().subspan(reg.base, reg.bytes);
    std::memcpy(reg.shadow.data(), img.data(), reg.bytes);
  }
}

}  // namespace archapt
