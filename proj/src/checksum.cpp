#include "archapt/checksum.hpp"

#include <cassert>
#include <cstring>
#include <map>

namespace archapt {

using namespace layout;

ChecksumBlock ChecksumBlock::from_bytes(std::span<const uint8_t> b) {
  assert(b.size() >= kBlockSize);
  ChecksumBlock out;
  for (size_t i = 0; i < 8; ++i) {
    uint64_t v = 0;
    for (size_t j = 0; j < 8; ++j) v |= uint64_t(b[i * 8 + j]) << (8 * j);
    out.lane[i] = v;
  }
  return out;
}

void ChecksumBlock::to_bytes(std::span<uint8_t> out) const {
  assert(out.size() >= kBlockSize);
  for (size_t i = 0; i < 8; ++i)
    for (size_t j = 0; j < 8; ++j) out[i * 8 + j] = uint8_t(lane[i] >> (8 * j));
}

namespace {

uint64_t data_offset_checked(uint64_t obj_addr) {
  uint64_t off = obj_addr - page_base(obj_addr);
  if (off >= kDataBytes)
    throw LayoutError("address in checksum/reserved region of its page: offset " +
                      std::to_string(off));
  return off;
}

ChecksumBlock read_block(std::span<const uint8_t> page, uint64_t off) {
  return ChecksumBlock::from_bytes(page.subspan(off, kBlockSize));
}

ChecksumBlock column_sum(std::span<const uint8_t> page, uint32_t col) {
  ChecksumBlock sum;
  for (uint32_t r = 0; r < kRows; ++r) sum += read_block(page, data_block_offset(r, col));
  return sum;
}

ChecksumBlock row_sum(std::span<const uint8_t> page, uint32_t row) {
  ChecksumBlock sum;
  for (uint32_t c = 0; c < kCols; ++c) sum += read_block(page, data_block_offset(row, c));
  return sum;
}

void write_block(std::span<uint8_t> page, uint64_t off, const ChecksumBlock& b) {
  b.to_bytes(page.subspan(off, kBlockSize));
}

}  // namespace

uint64_t locate_consistency(uint64_t obj_addr) {
  uint64_t off = data_offset_checked(obj_addr);
  return page_base(obj_addr) + cons_block_offset(column_of(off));
}

uint64_t locate_correlation(uint64_t obj_addr) {
  uint64_t off = data_offset_checked(obj_addr);
  return page_base(obj_addr) + corr_block_offset(row_of(off));
}

int64_t locate_consistency_ceil(uint64_t page_base_addr, uint64_t obj_offset) {
  int64_t col_ceil = int64_t((obj_offset + kColumnBytes - 1) / kColumnBytes);
  return int64_t(page_base_addr) + (col_ceil - 1) * int64_t(kBlockSize) + int64_t(kDataBytes);
}

int64_t locate_correlation_ceil(uint64_t page_base_addr, uint64_t obj_offset) {
  uint64_t in_col = obj_offset % kColumnBytes;
  int64_t row_ceil = int64_t((in_col + kBlockSize - 1) / kBlockSize);
  return int64_t(page_base_addr) + (row_ceil - 1) * int64_t(kBlockSize) + int64_t(kCorrBase);
}

VerifyReport verify_page_bytes(std::span<const uint8_t> page) {
  assert(page.size() >= kPageSize);
  VerifyReport rep;
  for (uint32_t c = 0; c < kCols; ++c)
    if (column_sum(page, c) != read_block(page, cons_block_offset(c))) rep.bad_columns.insert(c);
  for (uint32_t r = 0; r < kRows; ++r)
    if (row_sum(page, r) != read_block(page, corr_block_offset(r))) rep.bad_rows.insert(r);
  return rep;
}

namespace {

struct Deltas {
  std::map<uint32_t, ChecksumBlock> rows;  // stored corr - recomputed row sum
  std::map<uint32_t, ChecksumBlock> cols;  // stored cons - recomputed column sum
};

Deltas compute_deltas(std::span<const uint8_t> page) {
  Deltas d;
  for (uint32_t r = 0; r < kRows; ++r) {
    ChecksumBlock delta = read_block(page, corr_block_offset(r)) - row_sum(page, r);
    if (!delta.is_zero()) d.rows[r] = delta;
  }
  for (uint32_t c = 0; c < kCols; ++c) {
    ChecksumBlock delta = read_block(page, cons_block_offset(c)) - column_sum(page, c);
    if (!delta.is_zero()) d.cols[c] = delta;
  }
  return d;
}

}  // namespace

// Iterative decode. Suspects are the (bad row x bad column) intersections.
// A row or column with exactly one suspect is reconstructed from its
// checksum. When peeling stalls, a bad row and bad column whose checksum
// deltas are lane-wise equal (and unambiguous) identify a single bad block,
// which clears both lines at once; this resolves scattered independent
// errors that pure peeling cannot order. A bad line with no suspects at all
// means the checksum block itself is stale and is recomputed from data.
// Anything left is reported uncorrectable.
CorrectReport correct_page_bytes(std::span<uint8_t> page) {
  assert(page.size() >= kPageSize);
  CorrectReport rep;

  auto apply = [&](uint32_t r, uint32_t c, const ChecksumBlock& value) {
    write_block(page, data_block_offset(r, c), value);
    rep.corrected++;
    rep.corrected_addrs.push_back(data_block_offset(r, c));
  };

  for (;;) {
    Deltas d = compute_deltas(page);
    if (d.rows.empty() && d.cols.empty()) return rep;

    // suspect count per line
    bool progress = false;
    for (auto& [r, delta] : d.rows) {
      std::vector<uint32_t> cols;
      for (auto& [c, _] : d.cols) cols.push_back(c);
      if (cols.size() == 1) {
        uint32_t c = cols[0];
        ChecksumBlock fixed = read_block(page, data_block_offset(r, c)) + delta;
        apply(r, c, fixed);
        progress = true;
        break;
      }
    }
    if (progress) continue;

    for (auto& [c, delta] : d.cols) {
      std::vector<uint32_t> rows;
      for (auto& [r, _] : d.rows) rows.push_back(r);
      if (rows.size() == 1) {
        uint32_t r = rows[0];
        ChecksumBlock fixed = read_block(page, data_block_offset(r, c)) + delta;
        apply(r, c, fixed);
        progress = true;
        break;
      }
    }
    if (progress) continue;

    // delta matching across stalled rows and columns
    for (auto& [r, rd] : d.rows) {
      uint32_t match = kCols, matches = 0;
      for (auto& [c, cd] : d.cols)
        if (cd == rd) {
          match = c;
          matches++;
        }
      if (matches != 1) continue;
      uint32_t rows_same = 0;
      for (auto& [r2, rd2] : d.rows)
        if (rd2 == rd) rows_same++;
      if (rows_same != 1) continue;  // ambiguous pairing
      ChecksumBlock fixed = read_block(page, data_block_offset(r, match)) + rd;
      apply(r, match, fixed);
      progress = true;
      break;
    }
    if (progress) continue;

    // a flagged line with the other dimension clean: the checksum block
    // itself is stale, rebuild it from data
    if (d.rows.empty() && !d.cols.empty()) {
      for (auto& [c, _] : d.cols) {
        write_block(page, cons_block_offset(c), column_sum(page, c));
        rep.corrected++;
        rep.corrected_addrs.push_back(cons_block_offset(c));
      }
      continue;
    }
    if (d.cols.empty() && !d.rows.empty()) {
      for (auto& [r, _] : d.rows) {
        write_block(page, corr_block_offset(r), row_sum(page, r));
        rep.corrected++;
        rep.corrected_addrs.push_back(corr_block_offset(r));
      }
      continue;
    }

    // stalled: everything in the cross product stays suspect
    for (auto& [r, _] : d.rows)
      for (auto& [c, __] : d.cols) rep.uncorrectable.insert({r, c});
    return rep;
  }
}

VerifyReport verify_page(const NvmCache& mem, uint64_t page_addr) {
  std::vector<uint8_t> page = mem.peek(page_addr, kPageSize);
  return verify_page_bytes(page);
}

CorrectReport correct_page(NvmCache& mem, uint64_t page_addr, RuntimeCounters* rc) {
  std::vector<uint8_t> page = mem.peek(page_addr, kPageSize);
  CorrectReport rep = correct_page_bytes(page);
  for (uint64_t off : rep.corrected_addrs) {
    mem.store(page_addr + off, std::span<const uint8_t>(page.data() + off, kBlockSize));
    classified_flush(mem, rc, FlushClass::Checksum, page_addr + off);
  }
  // report corrected addresses as absolute
  for (uint64_t& off : rep.corrected_addrs) off += page_addr;
  return rep;
}

uint64_t build_checksums(NvmCache& mem, uint64_t page_addr, const std::set<uint32_t>& columns,
                         RuntimeCounters* rc) {
  std::vector<uint8_t> page = mem.peek(page_addr, kPageSize);
  uint64_t flushed = 0;
  std::array<uint8_t, kBlockSize> buf;
  for (uint32_t c : columns) {
    if (c >= kCols) throw LayoutError("column index out of range");
    column_sum(page, c).to_bytes(buf);
    mem.store(page_addr + cons_block_offset(c), buf);
    classified_flush(mem, rc, FlushClass::Checksum, page_addr + cons_block_offset(c));
    flushed++;
  }
  for (uint32_t r = 0; r < kRows; ++r) {
    row_sum(page, r).to_bytes(buf);
    mem.store(page_addr + corr_block_offset(r), buf);
    classified_flush(mem, rc, FlushClass::Checksum, page_addr + corr_block_offset(r));
    flushed++;
  }
  return flushed;
}

uint64_t update_checksums(NvmCache& mem, uint64_t block_addr, const ChecksumBlock& old_block,
                          const ChecksumBlock& new_block, RuntimeCounters* rc) {
  if (old_block == new_block) return 0;
  if (block_addr % kBlockSize != 0) throw LayoutError("block address not aligned");
  uint64_t off = data_offset_checked(block_addr);
  ChecksumBlock delta = new_block - old_block;
  uint64_t cons_addr = page_base(block_addr) + cons_block_offset(column_of(off));
  uint64_t corr_addr = page_base(block_addr) + corr_block_offset(row_of(off));
  std::array<uint8_t, kBlockSize> buf;
  for (uint64_t addr : {cons_addr, corr_addr}) {
    ChecksumBlock cur = ChecksumBlock::from_bytes(mem.peek(addr, kBlockSize));
    (cur + delta).to_bytes(buf);
    mem.store(addr, buf);
    classified_flush(mem, rc, FlushClass::Checksum, addr);
  }
  return 2;
}

}  // namespace archapt
