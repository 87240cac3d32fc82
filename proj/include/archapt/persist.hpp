#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "archapt/checksum.hpp"
#include "archapt/counters.hpp"
#include "archapt/nvm_cache.hpp"

namespace archapt {

// Checksum maintenance for the protected pools. The unit keeps a volatile
// shadow of the last value folded into each page's checksums; the stored
// checksum blocks always equal the lane-wise sums of that shadow. Folding a
// byte range (at flush completion, at a skipped flush, or after a free)
// applies (new - shadow) deltas to the touched column and row checksum
// blocks, flushes them, and advances the shadow. The shadow is rebuilt from
// the durable image after recovery, when image and checksums agree again.
class PersistUnit {
 public:
  PersistUnit(NvmCache& mem, RuntimeCounters* rc = nullptr) : mem_(mem), rc_(rc) {}

  void register_region(uint64_t base, uint64_t bytes);
  bool protects(uint64_t addr) const { return shadow_index(addr) >= 0; }

  // Fold the current logical value of [addr, addr+len) into its pages'
  // checksums. Returns checksum blocks flushed. No-op outside protected
  // regions.
  uint64_t fold_range(uint64_t addr, uint64_t len);

  std::vector<uint8_t> shadow_copy(uint64_t addr, uint64_t len) const;

  void rebuild_from_image();

 private:
  struct Region {
    uint64_t base;
    uint64_t bytes;
    std::vector<uint8_t> shadow;
  };

  int shadow_index(uint64_t addr) const;

  NvmCache& mem_;
  RuntimeCounters* rc_;
  std::vector<Region> regions_;
};

}  // namespace archapt
