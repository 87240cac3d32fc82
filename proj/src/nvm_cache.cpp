#include "archapt/nvm_cache.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cstring>

namespace archapt {

namespace {

bool is_pow2(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

// splitmix64; one deterministic stream per cache instance
uint64_t next_rand(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint32_t next_pow2(uint32_t v) {
  uint32_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace

EvictionPolicy policy_from_string(const std::string& name) {
  if (name == "lru") return EvictionPolicy::Lru;
  if (name == "plru") return EvictionPolicy::PseudoLru;
  if (name == "bip") return EvictionPolicy::BimodalInsertion;
  if (name == "random") return EvictionPolicy::Random;
  throw ConfigError("unknown eviction policy: " + name);
}

std::string to_string(EvictionPolicy p) {
  switch (p) {
    case EvictionPolicy::Lru: return "lru";
    case EvictionPolicy::PseudoLru: return "plru";
    case EvictionPolicy::BimodalInsertion: return "bip";
    case EvictionPolicy::Random: return "random";
  }
  return "?";
}

NvmCache::NvmCache(uint64_t nvm_capacity_bytes, const CacheConfig& cfg) : cfg_(cfg) {
  if (!is_pow2(cfg.sets)) throw ConfigError("cache sets must be a power of two");
  if (cfg.ways == 0 || cfg.ways > 64) throw ConfigError("cache ways must be in 1..64");
  if (nvm_capacity_bytes == 0 || nvm_capacity_bytes % kBlockSize != 0)
    throw ConfigError("nvm capacity must be a nonzero multiple of the block size");
  image_.assign(nvm_capacity_bytes, 0);
  lines_.assign(size_t(cfg.sets) * cfg.ways, Line{});
  plru_.assign(cfg.sets, 0);
  plru_leaves_ = next_pow2(cfg.ways);
  rng_state_ = cfg.seed;
}

void NvmCache::set_policy(EvictionPolicy policy, uint64_t seed) {
  cfg_.policy = policy;
  cfg_.seed = seed;
  rng_state_ = seed;
  clock_ = 0;
  std::fill(plru_.begin(), plru_.end(), 0);
  for (auto& l : lines_) l = Line{};
}

void NvmCache::check_range(uint64_t addr, uint64_t len) const {
  if (addr + len > image_.size() || addr + len < addr)
    throw RangeError("address out of range: " + std::to_string(addr) + "+" + std::to_string(len));
}

void NvmCache::trace(const char* op, uint64_t addr, uint64_t len) {
  if (trace_) *trace_ << op << ' ' << addr << ' ' << len << '\n';
}

NvmCache::Line* NvmCache::find(uint64_t block) {
  uint32_t set = set_of(block);
  Line* base = &lines_[size_t(set) * cfg_.ways];
  for (uint32_t w = 0; w < cfg_.ways; ++w)
    if (base[w].valid && base[w].block == block) return &base[w];
  return nullptr;
}

const NvmCache::Line* NvmCache::find(uint64_t block) const {
  return const_cast<NvmCache*>(this)->find(block);
}

void NvmCache::write_back(Line& line) {
  uint64_t base = line.block * kBlockSize;
  for (uint32_t i = 0; i < kBlockSize; ++i)
    if (line.dirty & (1ULL << i)) image_[base + i] = line.data[i];
  line.dirty = 0;
}

void NvmCache::plru_touch(uint32_t set, uint32_t way) {
  // set every bit on the path to point away from `way`
  uint64_t& tree = plru_[set];
  uint32_t lo = 0, hi = plru_leaves_, node = 0;
  while (hi - lo > 1) {
    uint32_t mid = (lo + hi) / 2;
    if (way < mid) {
      tree |= (1ULL << node);  // 1 = victim search goes right
      node = 2 * node + 1;
      hi = mid;
    } else {
      tree &= ~(1ULL << node);
      node = 2 * node + 2;
      lo = mid;
    }
  }
}

uint32_t NvmCache::plru_victim(uint32_t set) const {
  // follow the bits; subtrees holding no real way are never entered
  uint64_t tree = plru_[set];
  uint32_t lo = 0, hi = plru_leaves_, node = 0;
  while (hi - lo > 1) {
    uint32_t mid = (lo + hi) / 2;
    bool right = (tree >> node) & 1;
    if (right && mid >= cfg_.ways) right = false;  // right half is padding
    if (right) {
      node = 2 * node + 2;
      lo = mid;
    } else {
      node = 2 * node + 1;
      hi = mid;
    }
  }
  assert(lo < cfg_.ways);
  return lo;
}

void NvmCache::touch(uint32_t set, uint32_t way) {
  switch (cfg_.policy) {
    case EvictionPolicy::Lru:
    case EvictionPolicy::BimodalInsertion:
      lines_[size_t(set) * cfg_.ways + way].stamp = ++clock_;
      break;
    case EvictionPolicy::PseudoLru:
      plru_touch(set, way);
      break;
    case EvictionPolicy::Random:
      break;
  }
}

void NvmCache::on_insert(uint32_t set, uint32_t way) {
  if (cfg_.policy == EvictionPolicy::BimodalInsertion) {
    // most insertions land at the LRU position; 1/32 go to MRU
    if (next_rand(rng_state_) % 32 == 0) {
      lines_[size_t(set) * cfg_.ways + way].stamp = ++clock_;
    } else {
      int64_t oldest = clock_;
      Line* base = &lines_[size_t(set) * cfg_.ways];
      for (uint32_t w = 0; w < cfg_.ways; ++w)
        if (base[w].valid && w != way) oldest = std::min(oldest, base[w].stamp);
      lines_[size_t(set) * cfg_.ways + way].stamp = oldest - 1;
    }
    return;
  }
  touch(set, way);
}

uint32_t NvmCache::pick_victim(uint32_t set) {
  Line* base = &lines_[size_t(set) * cfg_.ways];
  switch (cfg_.policy) {
    case EvictionPolicy::Lru:
    case EvictionPolicy::BimodalInsertion: {
      uint32_t victim = 0;
      for (uint32_t w = 1; w < cfg_.ways; ++w)
        if (base[w].stamp < base[victim].stamp) victim = w;
      return victim;
    }
    case EvictionPolicy::PseudoLru:
      return plru_victim(set);
    case EvictionPolicy::Random:
      return uint32_t(next_rand(rng_state_) % cfg_.ways);
  }
  return 0;
}

NvmCache::Line& NvmCache::fetch(uint64_t block) {
  uint32_t set = set_of(block);
  Line* base = &lines_[size_t(set) * cfg_.ways];
  for (uint32_t w = 0; w < cfg_.ways; ++w) {
    if (base[w].valid && base[w].block == block) {
      touch(set, w);
      return base[w];
    }
  }
  uint32_t slot = cfg_.ways;
  for (uint32_t w = 0; w < cfg_.ways; ++w) {
    if (!base[w].valid) {
      slot = w;
      break;
    }
  }
  if (slot == cfg_.ways) {
    slot = pick_victim(set);
    Line& victim = base[slot];
    bool dirty = victim.dirty != 0;
    if (dirty) {
      write_back(victim);
      counters_.writebacks_by_eviction++;
    }
    if (sink_) sink_({Event::Kind::Eviction, victim.block * kBlockSize, dirty});
  }
  Line& line = base[slot];
  line.block = block;
  line.valid = true;
  line.dirty = 0;
  std::memcpy(line.data.data(), &image_[block * kBlockSize], kBlockSize);
  on_insert(set, slot);
  return line;
}

void NvmCache::store(uint64_t addr, std::span<const uint8_t> data) {
  check_range(addr, data.size());
  trace("store", addr, data.size());
  uint64_t pos = 0;
  while (pos < data.size()) {
    uint64_t a = addr + pos;
    uint64_t block = block_of(a);
    uint32_t off = uint32_t(a % kBlockSize);
    uint32_t n = uint32_t(std::min<uint64_t>(kBlockSize - off, data.size() - pos));
    Line& line = fetch(block);
    std::memcpy(line.data.data() + off, data.data() + pos, n);
    for (uint32_t i = 0; i < n; ++i) line.dirty |= 1ULL << (off + i);
    pos += n;
  }
}

void NvmCache::load(uint64_t addr, std::span<uint8_t> out) {
  check_range(addr, out.size());
  trace("load", addr, out.size());
  uint64_t pos = 0;
  while (pos < out.size()) {
    uint64_t a = addr + pos;
    uint64_t block = block_of(a);
    uint32_t off = uint32_t(a % kBlockSize);
    uint32_t n = uint32_t(std::min<uint64_t>(kBlockSize - off, out.size() - pos));
    Line& line = fetch(block);
    std::memcpy(out.data() + pos, line.data.data() + off, n);
    pos += n;
  }
}

std::vector<uint8_t> NvmCache::load(uint64_t addr, uint64_t len) {
  std::vector<uint8_t> out(len);
  load(addr, std::span<uint8_t>(out));
  return out;
}

void NvmCache::peek(uint64_t addr, std::span<uint8_t> out) const {
  check_range(addr, out.size());
  uint64_t pos = 0;
  while (pos < out.size()) {
    uint64_t a = addr + pos;
    uint64_t block = block_of(a);
    uint32_t off = uint32_t(a % kBlockSize);
    uint32_t n = uint32_t(std::min<uint64_t>(kBlockSize - off, out.size() - pos));
    if (const Line* line = find(block)) {
      std::memcpy(out.data() + pos, line->data.data() + off, n);
    } else {
      std::memcpy(out.data() + pos, &image_[a], n);
    }
    pos += n;
  }
}

std::vector<uint8_t> NvmCache::peek(uint64_t addr, uint64_t len) const {
  std::vector<uint8_t> out(len);
  peek(addr, std::span<uint8_t>(out));
  return out;
}

FlushResult NvmCache::flush_line(uint64_t addr) {
  check_range(addr, 1);
  trace("flush", block_base(addr), kBlockSize);
  counters_.flushes_issued++;
  Line* line = find(block_of(addr));
  if (!line || line->dirty == 0) return {};
  uint32_t bytes = uint32_t(std::popcount(line->dirty));
  write_back(*line);
  counters_.lines_flushed++;
  counters_.dirty_bytes_flushed += bytes;
  size_t bucket = (size_t(bytes) * 10 - 1) / kBlockSize;
  counters_.dirtiness_histogram[std::min<size_t>(bucket, 9)]++;
  return {true, bytes};
}

void NvmCache::fence() {
  trace("fence", 0, 0);
  counters_.barriers_issued++;
}

std::vector<uint8_t> NvmCache::crash() {
  trace("crash", 0, 0);
  for (auto& l : lines_) l = Line{};
  std::fill(plru_.begin(), plru_.end(), 0);
  return image_;
}

bool NvmCache::is_resident(uint64_t addr) const { return find(block_of(addr)) != nullptr; }

uint64_t NvmCache::dirty_mask(uint64_t addr) const {
  const Line* line = find(block_of(addr));
  return line ? line->dirty : 0;
}

std::vector<NvmCache::WayState> NvmCache::set_contents(uint32_t set) const {
  std::vector<WayState> out;
  const Line* base = &lines_[size_t(set) * cfg_.ways];
  for (uint32_t w = 0; w < cfg_.ways; ++w)
    out.push_back({base[w].block, base[w].stamp, base[w].dirty, base[w].valid});
  return out;
}

}  // namespace archapt
