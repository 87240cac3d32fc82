#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "archapt/errors.hpp"

namespace archapt {

constexpr uint64_t kBlockSize = 64;  // cache block, bytes

inline uint64_t block_of(uint64_t addr) { return addr / kBlockSize; }
inline uint64_t block_base(uint64_t addr) { return addr & ~(kBlockSize - 1); }

enum class EvictionPolicy { Lru, PseudoLru, BimodalInsertion, Random };

EvictionPolicy policy_from_string(const std::string& name);  // lru|plru|bip|random
std::string to_string(EvictionPolicy p);

struct CacheConfig {
  uint32_t sets = 2048;  // power of two
  uint32_t ways = 11;
  EvictionPolicy policy = EvictionPolicy::Lru;
  uint64_t seed = 1;

  uint64_t capacity_bytes() const { return uint64_t(sets) * ways * kBlockSize; }
  uint64_t capacity_blocks() const { return uint64_t(sets) * ways; }
};

struct FlushCounters {
  uint64_t flushes_issued = 0;
  uint64_t flushes_skipped = 0;  // blocks whose flush the runtime elided
  uint64_t barriers_issued = 0;
  uint64_t dirty_bytes_flushed = 0;
  uint64_t lines_flushed = 0;
  uint64_t writebacks_by_eviction = 0;
  // per flushed line, bucket i covers dirtiness in (i/10, (i+1)/10]
  std::array<uint64_t, 10> dirtiness_histogram{};

  double average_dirtiness() const {
    return lines_flushed == 0
               ? 0.0
               : double(dirty_bytes_flushed) / (double(kBlockSize) * double(lines_flushed));
  }
};

struct FlushResult {
  bool wrote_back = false;
  uint32_t dirty_bytes = 0;
};

// Emulated byte-addressable persistent memory behind a set-associative
// write-back cache. Stores dirty the cache only; data reaches the persistent
// image through flush_line (clwb-like: write back, keep valid) or through
// eviction of a dirty victim. crash() drops every cache line without
// write-back. All randomness comes from the seeded engine, so a given
// (config, seed, trace) replays bit-identically.
class NvmCache {
 public:
  struct Event {
    enum class Kind { Eviction } kind;
    uint64_t block_addr = 0;
    bool wrote_back = false;
  };
  using EventSink = std::function<void(const Event&)>;

  NvmCache(uint64_t nvm_capacity_bytes, const CacheConfig& cfg);

  void store(uint64_t addr, std::span<const uint8_t> data);
  void load(uint64_t addr, std::span<uint8_t> out);
  std::vector<uint8_t> load(uint64_t addr, uint64_t len);
  FlushResult flush_line(uint64_t addr);
  void fence();
  std::vector<uint8_t> crash();  // returns the post-crash durable image
  void set_policy(EvictionPolicy policy, uint64_t seed);

  // Read-through without touching recency, residency or counters. Used by
  // checksum maintenance, the log scanner and tests.
  void peek(uint64_t addr, std::span<uint8_t> out) const;
  std::vector<uint8_t> peek(uint64_t addr, uint64_t len) const;

  void note_skipped_flush(uint64_t blocks) { counters_.flushes_skipped += blocks; }

  const FlushCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = FlushCounters{}; }

  uint64_t capacity() const { return image_.size(); }
  const CacheConfig& config() const { return cfg_; }
  std::span<const uint8_t> image() const { return image_; }

  // introspection for tests and the crash harness
  bool is_resident(uint64_t addr) const;
  uint64_t dirty_mask(uint64_t addr) const;  // 0 when not resident
  struct WayState {
    uint64_t block;
    int64_t stamp;
    uint64_t dirty_mask;
    bool valid;
  };
  std::vector<WayState> set_contents(uint32_t set) const;

  void set_event_sink(EventSink sink) { sink_ = std::move(sink); }
  void set_trace(std::ostream* os) { trace_ = os; }

 private:
  struct Line {
    uint64_t block = 0;
    uint64_t dirty = 0;  // bit i set => byte i differs from the image
    int64_t stamp = 0;
    bool valid = false;
    std::array<uint8_t, kBlockSize> data{};
  };

  uint32_t set_of(uint64_t block) const { return uint32_t(block & (cfg_.sets - 1)); }
  Line* find(uint64_t block);
  const Line* find(uint64_t block) const;
  Line& fetch(uint64_t block);  // resident or filled from image, may evict
  void write_back(Line& line);
  void touch(uint32_t set, uint32_t way);            // recency update on hit
  void on_insert(uint32_t set, uint32_t way);        // insertion-position policy
  uint32_t pick_victim(uint32_t set);
  void plru_touch(uint32_t set, uint32_t way);
  uint32_t plru_victim(uint32_t set) const;
  void check_range(uint64_t addr, uint64_t len) const;
  void trace(const char* op, uint64_t addr, uint64_t len);

  CacheConfig cfg_;
  std::vector<uint8_t> image_;
  std::vector<Line> lines_;       // sets * ways
  std::vector<uint64_t> plru_;    // one bit-tree per set
  uint64_t rng_state_ = 0;
  int64_t clock_ = 0;
  uint32_t plru_leaves_ = 0;
  FlushCounters counters_;
  EventSink sink_;
  std::ostream* trace_ = nullptr;
};

}  // namespace archapt
