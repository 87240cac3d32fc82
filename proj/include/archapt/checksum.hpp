#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "archapt/counters.hpp"
#include "archapt/nvm_cache.hpp"

namespace archapt {

// A 4KB page holds a 7x7 grid of 64-byte data blocks followed by one row of
// per-column checksums and one column of per-row checksums. Block (r, c)
// lives at page + c*448 + r*64, so a data column is byte-contiguous. The
// final 64 bytes of the page are reserved.
namespace layout {
constexpr uint64_t kPageSize = 4096;           // mps
constexpr uint64_t kDataBytes = 3136;          // 7x7 data blocks
constexpr uint64_t kChecksumBytes = 896;       // 7 column + 7 row checksum blocks
constexpr uint32_t kCols = 7;
constexpr uint32_t kRows = 7;
constexpr uint64_t kColumnBytes = 448;         // bytes per data column
constexpr uint64_t kConsBase = kDataBytes;     // column checksums at [3136, 3584)
constexpr uint64_t kCorrBase = 3584;           // row checksums at [3584, 4032)

inline uint64_t page_base(uint64_t addr) { return addr & ~(kPageSize - 1); }
inline uint32_t column_of(uint64_t data_offset) { return uint32_t(data_offset / kColumnBytes); }
inline uint32_t row_of(uint64_t data_offset) {
  return uint32_t((data_offset % kColumnBytes) / kBlockSize);
}
inline uint64_t data_block_offset(uint32_t row, uint32_t col) {
  return uint64_t(col) * kColumnBytes + uint64_t(row) * kBlockSize;
}
inline uint64_t cons_block_offset(uint32_t col) { return kConsBase + uint64_t(col) * kBlockSize; }
inline uint64_t corr_block_offset(uint32_t row) { return kCorrBase + uint64_t(row) * kBlockSize; }
}  // namespace layout

// One 64-byte block viewed as eight little-endian 64-bit lanes. Addition and
// subtraction wrap per lane, which is what makes single-block reconstruction
// from a sum exact.
struct ChecksumBlock {
  std::array<uint64_t, 8> lane{};

  static ChecksumBlock from_bytes(std::span<const uint8_t> b);
  void to_bytes(std::span<uint8_t> out) const;

  ChecksumBlock& operator+=(const ChecksumBlock& o) {
    for (size_t i = 0; i < 8; ++i) lane[i] += o.lane[i];
    return *this;
  }
  ChecksumBlock& operator-=(const ChecksumBlock& o) {
    for (size_t i = 0; i < 8; ++i) lane[i] -= o.lane[i];
    return *this;
  }
  friend ChecksumBlock operator+(ChecksumBlock a, const ChecksumBlock& b) { return a += b; }
  friend ChecksumBlock operator-(ChecksumBlock a, const ChecksumBlock& b) { return a -= b; }
  bool operator==(const ChecksumBlock&) const = default;
  bool is_zero() const {
    for (uint64_t v : lane)
      if (v) return false;
    return true;
  }
};

// Checksum locators. `obj_addr` must point into the data region of its page.
uint64_t locate_consistency(uint64_t obj_addr);
uint64_t locate_correlation(uint64_t obj_addr);

// The ceil-based forms of the locators. They agree with the locators above
// on every offset that is not an exact column (448) or block (64) multiple
// and go out of region on those boundaries; kept as an independent evaluator
// for the equivalence tests.
int64_t locate_consistency_ceil(uint64_t page_base, uint64_t obj_offset);
int64_t locate_correlation_ceil(uint64_t page_base, uint64_t obj_offset);

struct VerifyReport {
  std::set<uint32_t> bad_columns;
  std::set<uint32_t> bad_rows;
  bool clean() const { return bad_columns.empty() && bad_rows.empty(); }
};

struct CorrectReport {
  uint64_t corrected = 0;                              // blocks rewritten
  std::set<std::pair<uint32_t, uint32_t>> uncorrectable;  // (row, col)
  std::vector<uint64_t> corrected_addrs;               // block base addresses
};

// Pure forms operating on one 4096-byte page.
VerifyReport verify_page_bytes(std::span<const uint8_t> page);
CorrectReport correct_page_bytes(std::span<uint8_t> page);

// Emulator-backed forms: reads go through peek, corrected blocks and
// checksum blocks are stored and flushed (checksum-class).
VerifyReport verify_page(const NvmCache& mem, uint64_t page_addr);
CorrectReport correct_page(NvmCache& mem, uint64_t page_addr, RuntimeCounters* rc = nullptr);

// Recompute and persist checksums: consistency checksums for the named
// columns plus all row checksums. Returns checksum blocks flushed (at most
// 14 for a full page).
uint64_t build_checksums(NvmCache& mem, uint64_t page_addr, const std::set<uint32_t>& columns,
                         RuntimeCounters* rc = nullptr);

// Incremental update for one data block: fold (new - old) into the block's
// column and row checksum and flush them. Returns checksum blocks flushed
// (0 when old == new).
uint64_t update_checksums(NvmCache& mem, uint64_t block_addr, const ChecksumBlock& old_block,
                          const ChecksumBlock& new_block, RuntimeCounters* rc = nullptr);

}  // namespace archapt
