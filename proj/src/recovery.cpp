#include "archapt/recovery.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "archapt/checksum.hpp"

namespace archapt {

namespace {

struct ObjSpan {
  uint64_t addr;
  uint32_t size;
};

// object covering the block, if any (allocations never share a block with a
// different object except pair halves, which the caller merged)
int find_covering(const std::vector<ObjSpan>& objs, uint64_t block_addr) {
  // first object starting after the block
  size_t lo = 0, hi = objs.size();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (objs[mid].addr <= block_addr + kBlockSize - 1)
      lo = mid + 1;
    else
      hi = mid;
  }
  // scan back over objects that may still overlap
  for (size_t i = lo; i-- > 0;) {
    if (objs[i].addr + objs[i].size <= block_addr) break;
    if (objs[i].addr < block_addr + kBlockSize && objs[i].addr + objs[i].size > block_addr)
      return int(i);
  }
  return -1;
}

}  // namespace

TxnClassification classify_txns(const std::vector<LogRecordInfo>& records) {
  std::map<uint64_t, int> level;  // 0 value records only, 1 logical, 2 physical
  for (const LogRecordInfo& r : records) {
    int l = 0;
    if (r.type == LogType::LogicalMarker) l = 1;
    if (r.type == LogType::PhysicalMarker) l = 2;
    auto [it, inserted] = level.emplace(r.txn_id, l);
    if (!inserted) it->second = std::max(it->second, l);
  }
  TxnClassification out;
  for (auto& [txn, l] : level) {
    if (l == 2)
      out.physical.push_back(txn);
    else if (l == 1)
      out.logical_only.push_back(txn);
    else
      out.active.push_back(txn);
  }
  return out;
}

RecoveryReport recover(NvmCache& mem, PoolSet& pools, PersistUnit& persist, RuntimeCounters* rc,
                       const RecoveryOptions& opt) {
  RecoveryReport rep;

  pools.rebuild_from_metadata();

  LogManager lm(mem, pools, rc);
  lm.seek_end();
  std::vector<LogRecordInfo> records = lm.scan();
  TxnClassification cls = classify_txns(records);
  for (const LogRecordInfo& r : records) {
    rep.max_seq = std::max(rep.max_seq, r.seq);
    rep.max_txn = std::max(rep.max_txn, r.txn_id);
  }

  std::unordered_set<uint64_t> physical(cls.physical.begin(), cls.physical.end());
  std::unordered_set<uint64_t> logical(cls.logical_only.begin(), cls.logical_only.end());

  // committed write authority: target address -> latest committed sequence
  std::unordered_map<uint64_t, uint64_t> committed_seq;
  for (const LogRecordInfo& r : records) {
    if (r.type != LogType::PhysicalMarker) continue;
    for (const MarkerEntry& e : lm.entries(r)) {
      auto [it, inserted] = committed_seq.emplace(e.addr, e.seq);
      if (!inserted) it->second = std::max(it->second, e.seq);
    }
  }
  // in-flight writes: latest live value-record sequence per address
  std::unordered_map<uint64_t, uint64_t> inflight_seq;
  for (const LogRecordInfo& r : records) {
    if (r.type != LogType::UndoValue && r.type != LogType::RedoValue) continue;
    if (physical.count(r.txn_id)) continue;
    auto [it, inserted] = inflight_seq.emplace(r.target_addr, r.seq);
    if (!inserted) it->second = std::max(it->second, r.seq);
  }

  // verify and repair every checksum-protected page
  std::vector<uint64_t> corrected_blocks, uncorrectable_blocks;
  for (PoolKind kind : {PoolKind::Key, PoolKind::FieldValue}) {
    uint64_t base = pools.pool_base(kind);
    for (uint64_t p = 0; p < pools.pool_pages(kind); ++p) {
      uint64_t page = base + p * layout::kPageSize;
      rep.pages_verified++;
      VerifyReport v = verify_page(mem, page);
      if (v.clean()) continue;
      rep.pages_flagged++;
      CorrectReport c = correct_page(mem, page, rc);
      for (uint64_t a : c.corrected_addrs)
        if (a - page < layout::kDataBytes) corrected_blocks.push_back(a);
      for (auto& [r0, c0] : c.uncorrectable)
        uncorrectable_blocks.push_back(page + layout::data_block_offset(r0, c0));
    }
  }
  rep.corrected_blocks = corrected_blocks.size();
  rep.uncorrectable_blocks = uncorrectable_blocks.size();

  // lift block-level findings to objects; writes still in flight at the
  // crash are the log mechanism's to resolve, not checksum detections
  std::vector<ObjSpan> objs;
  for (const Allocation& a : pools.live_allocations())
    if (pools.checksum_protected(a.addr)) objs.push_back({a.addr, a.size});
  auto is_inflight = [&](const ObjSpan& o) {
    auto lit = inflight_seq.find(o.addr);
    if (lit == inflight_seq.end()) return false;
    auto cit = committed_seq.find(o.addr);
    return cit == committed_seq.end() || lit->second > cit->second;
  };
  std::set<uint64_t> detected_objs, cc_objs;
  for (uint64_t b : corrected_blocks) {
    int i = find_covering(objs, b);
    if (i >= 0 && !is_inflight(objs[size_t(i)])) detected_objs.insert(objs[size_t(i)].addr);
  }
  for (uint64_t b : uncorrectable_blocks) {
    int i = find_covering(objs, b);
    if (i >= 0 && !is_inflight(objs[size_t(i)])) {
      detected_objs.insert(objs[size_t(i)].addr);
      cc_objs.insert(objs[size_t(i)].addr);
    }
  }
  rep.detected = detected_objs.size();
  rep.uncorrectable = cc_objs.size();
  rep.corrected = rep.detected - rep.uncorrectable;

  auto apply_bytes = [&](uint64_t addr, std::span<const uint8_t> bytes) {
    mem.store(addr, bytes);
    for (uint64_t b = block_base(addr); b < addr + bytes.size(); b += kBlockSize)
      classified_flush(mem, rc, FlushClass::Object, b);
    persist.fold_range(addr, bytes.size());
  };

  // complete logically committed redo transactions from their logs
  std::vector<LogRecordInfo> rollforward, rollback;
  for (const LogRecordInfo& r : records) {
    if (r.type == LogType::RedoValue && logical.count(r.txn_id)) rollforward.push_back(r);
    if (r.type == LogType::UndoValue && !physical.count(r.txn_id)) rollback.push_back(r);
  }

  std::vector<uint64_t> recovered_committed;
  if (opt.rollforward_redo_logical) {
    std::sort(rollforward.begin(), rollforward.end(),
              [](auto& a, auto& b) { return a.seq < b.seq; });
    for (const LogRecordInfo& r : rollforward) {
      auto cit = committed_seq.find(r.target_addr);
      if (cit != committed_seq.end() && cit->second > r.seq) continue;  // superseded
      if (!pools.is_live(r.target_addr)) continue;
      std::vector<uint8_t> bytes = lm.payload(r);
      apply_bytes(r.target_addr, bytes);
      committed_seq[r.target_addr] = std::max(committed_seq[r.target_addr], r.seq);
    }
    for (uint64_t t : cls.logical_only) {
      // only redo transactions have redo value records
      bool is_redo = false;
      for (const LogRecordInfo& r : rollforward)
        if (r.txn_id == t) is_redo = true;
      if (is_redo) recovered_committed.push_back(t);
    }
  }
  std::unordered_set<uint64_t> rolled_forward(recovered_committed.begin(),
                                              recovered_committed.end());

  // cancel everything else from undo logs, newest first; never roll over a
  // later committed write
  std::sort(rollback.begin(), rollback.end(), [](auto& a, auto& b) { return a.seq > b.seq; });
  for (const LogRecordInfo& r : rollback) {
    auto cit = committed_seq.find(r.target_addr);
    if (cit != committed_seq.end() && cit->second > r.seq) continue;
    if (!pools.is_live(r.target_addr)) continue;
    std::vector<uint8_t> bytes = lm.payload(r);
    apply_bytes(r.target_addr, bytes);
  }

  for (uint64_t t : cls.physical) rep.committed.push_back(t);
  for (uint64_t t : recovered_committed) rep.committed.push_back(t);
  for (uint64_t t : cls.logical_only)
    if (!rolled_forward.count(t)) rep.rolled_back.push_back(t);
  for (uint64_t t : cls.active) rep.rolled_back.push_back(t);
  std::sort(rep.committed.begin(), rep.committed.end());
  std::sort(rep.rolled_back.begin(), rep.rolled_back.end());

  // the log region is fully resolved
  for (const LogRecordInfo& r : records) lm.void_record(r);

  persist.rebuild_from_image();
  return rep;
}

std::string RecoveryReport::to_json() const {
  std::ostringstream os;
  os << "{\"I_obj\":" << inconsistent_objects << ",\"DI_obj\":" << detected
     << ",\"CC_obj\":" << uncorrectable << ",\"corrected\":" << corrected << ",\"rolled_back\":[";
  for (size_t i = 0; i < rolled_back.size(); ++i) os << (i ? "," : "") << rolled_back[i];
  os << "],\"committed\":[";
  for (size_t i = 0; i < committed.size(); ++i) os << (i ? "," : "") << committed[i];
  os << "]}";
  return os.str();
}

}  // namespace archapt
