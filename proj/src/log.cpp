#include "archapt/log.hpp"

#include <array>
#include <cstring>

namespace archapt {

namespace {

constexpr uint32_t kDescBytes = 64;
constexpr uint32_t kMagic = 0x474c5241;
constexpr uint8_t kFlagUsed = 1;
constexpr uint8_t kFlagVoided = 2;
constexpr uint32_t kEntryBytes = 20;

uint32_t crc32(uint32_t crc, std::span<const uint8_t> data) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (uint8_t b : data) crc = table[(crc ^ b) & 0xff] ^ (crc >> 8);
  return ~crc;
}

void put_u64(uint8_t* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = uint8_t(v >> (8 * i));
}
void put_u32(uint8_t* p, uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = uint8_t(v >> (8 * i));
}
void put_u16(uint8_t* p, uint16_t v) {
  p[0] = uint8_t(v);
  p[1] = uint8_t(v >> 8);
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
uint16_t get_u16(const uint8_t* p) { return uint16_t(p[0] | (p[1] << 8)); }

}  // namespace

LogManager::LogManager(NvmCache& mem, PoolSet& pools, RuntimeCounters* rc)
    : mem_(mem), pools_(pools), rc_(rc) {
  base_ = pools.log_descriptor_base();
  slots_ = pools.log_descriptor_bytes() / kDescBytes;
}

uint64_t LogManager::desc_addr(uint32_t index) const {
  return base_ + uint64_t(index) * kDescBytes;
}

LogRecordInfo LogManager::append(LogType type, TxnMode mode, uint64_t txn, uint64_t seq,
                                 uint64_t target_addr, std::span<const uint8_t> payload,
                                 uint16_t entry_count, FlushClass payload_class) {
  if (next_ >= slots_) throw OutOfMemoryError("log descriptor table full");

  uint64_t payload_addr = 0;
  if (!payload.empty()) {
    Allocation a = pools_.pmalloc(PoolKind::Log, uint32_t(payload.size()));
    payload_addr = a.addr;
    mem_.store(a.addr, payload);
    for (uint64_t b = block_base(a.addr); b < a.addr + payload.size(); b += kBlockSize)
      classified_flush(mem_, rc_, payload_class, b);
  }

  std::array<uint8_t, kDescBytes> d{};
  put_u32(d.data(), kMagic);
  put_u64(d.data() + 8, txn);
  put_u64(d.data() + 16, seq);
  put_u64(d.data() + 24, target_addr);
  put_u64(d.data() + 32, payload_addr);
  put_u32(d.data() + 40, uint32_t(payload.size()));
  d[44] = uint8_t(type);
  d[45] = uint8_t(mode);
  d[46] = kFlagUsed;
  put_u16(d.data() + 48, entry_count);
  uint32_t crc = crc32(0, d);
  crc = crc32(crc, payload);
  put_u32(d.data() + 4, crc);

  uint32_t index = uint32_t(next_++);
  mem_.store(desc_addr(index), d);
  classified_flush(mem_, rc_, FlushClass::Metadata, desc_addr(index));

  return LogRecordInfo{type,         mode,  txn,          seq, target_addr, payload_addr,
                       uint32_t(payload.size()), entry_count, index};
}

LogRecordInfo LogManager::append_value(LogType type, TxnMode mode, uint64_t txn, uint64_t seq,
                                       uint64_t target_addr, std::span<const uint8_t> value) {
  return append(type, mode, txn, seq, target_addr, value, 0, FlushClass::Log);
}

LogRecordInfo LogManager::append_marker(LogType type, TxnMode mode, uint64_t txn, uint64_t seq,
                                        const std::vector<MarkerEntry>& entries) {
  std::vector<uint8_t> payload(entries.size() * kEntryBytes);
  for (size_t i = 0; i < entries.size(); ++i) {
    put_u64(payload.data() + i * kEntryBytes, entries[i].addr);
    put_u32(payload.data() + i * kEntryBytes + 8, entries[i].len);
    put_u64(payload.data() + i * kEntryBytes + 12, entries[i].seq);
  }
  return append(type, mode, txn, seq, 0, payload, uint16_t(entries.size()), FlushClass::Marker);
}

void LogManager::void_record(const LogRecordInfo& rec) {
  if (rec.payload_addr != 0) pools_.pfree(Allocation{rec.payload_addr, rec.payload_len, 0,
                                                     PoolKind::Log});
  std::vector<uint8_t> d = mem_.peek(desc_addr(rec.desc_index), kDescBytes);
  d[46] |= kFlagVoided;
  put_u32(d.data() + 4, 0);  // voided descriptors carry no checksum
  mem_.store(desc_addr(rec.desc_index), d);
  classified_flush(mem_, rc_, FlushClass::Metadata, desc_addr(rec.desc_index));
}

std::vector<LogRecordInfo> LogManager::scan() const {
  std::vector<LogRecordInfo> out;
  for (uint64_t i = 0; i < slots_; ++i) {
    std::vector<uint8_t> d = mem_.peek(desc_addr(uint32_t(i)), kDescBytes);
    uint8_t flags = d[46];
    if (!(flags & kFlagUsed)) {
      if (get_u32(d.data()) != 0)
        throw RecoveryError("log descriptor " + std::to_string(i) + ": bad framing");
      break;
    }
    if (get_u32(d.data()) != kMagic)
      throw RecoveryError("log descriptor " + std::to_string(i) + ": bad magic");
    if (flags & kFlagVoided) continue;

    LogRecordInfo rec;
    rec.type = LogType(d[44]);
    rec.mode = TxnMode(d[45]);
    rec.txn_id = get_u64(d.data() + 8);
    rec.seq = get_u64(d.data() + 16);
    rec.target_addr = get_u64(d.data() + 24);
    rec.payload_addr = get_u64(d.data() + 32);
    rec.payload_len = get_u32(d.data() + 40);
    rec.entry_count = get_u16(d.data() + 48);
    rec.desc_index = uint32_t(i);

    uint32_t stored = get_u32(d.data() + 4);
    put_u32(d.data() + 4, 0);
    uint32_t crc = crc32(0, d);
    if (rec.payload_len > 0) {
      std::vector<uint8_t> p = mem_.peek(rec.payload_addr, rec.payload_len);
      crc = crc32(crc, p);
    }
    if (crc != stored)
      throw RecoveryError("log descriptor " + std::to_string(i) + ": checksum mismatch");
    out.push_back(rec);
  }
  return out;
}

std::vector<uint8_t> LogManager::payload(const LogRecordInfo& rec) const {
  return mem_.peek(rec.payload_addr, rec.payload_len);
}

std::vector<MarkerEntry> LogManager::entries(const LogRecordInfo& rec) const {
  std::vector<uint8_t> p = payload(rec);
  std::vector<MarkerEntry> out;
  for (uint16_t i = 0; i < rec.entry_count; ++i) {
    const uint8_t* e = p.data() + size_t(i) * kEntryBytes;
    out.push_back({get_u64(e), get_u32(e + 8), get_u64(e + 12)});
  }
  return out;
}

void LogManager::seek_end() {
  for (uint64_t i = 0; i < slots_; ++i) {
    std::vector<uint8_t> d = mem_.peek(desc_addr(uint32_t(i)), kDescBytes);
    if (!(d[46] & kFlagUsed)) {
      next_ = i;
      return;
    }
  }
  next_ = slots_;
}

}  // namespace archapt
