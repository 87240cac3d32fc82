#include "archapt/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace archapt {

using nlohmann::ordered_json;

namespace {

uint64_t splitmix(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double now_secs() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

EnvConfig EnvConfig::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  EnvConfig c;
  c.nvm_bytes = j.value("nvm_bytes", c.nvm_bytes);
  if (j.contains("cache")) {
    auto& jc = j["cache"];
    c.cache.sets = jc.value("sets", c.cache.sets);
    c.cache.ways = jc.value("ways", c.cache.ways);
    c.cache.seed = jc.value("seed", c.cache.seed);
    if (jc.contains("policy")) c.cache.policy = policy_from_string(jc["policy"]);
  }
  c.tracker_blocks = j.value("tracker_blocks", c.tracker_blocks);
  if (j.contains("pools")) {
    auto& jp = j["pools"];
    c.pools.key_pool_bytes = jp.value("key_pool_bytes", c.pools.key_pool_bytes);
    c.pools.field_value_pool_bytes =
        jp.value("field_value_pool_bytes", c.pools.field_value_pool_bytes);
    c.pools.log_pool_bytes = jp.value("log_pool_bytes", c.pools.log_pool_bytes);
    c.pools.metadata_bytes = jp.value("metadata_bytes", c.pools.metadata_bytes);
    c.pools.log_descriptor_bytes =
        jp.value("log_descriptor_bytes", c.pools.log_descriptor_bytes);
    c.pools.base = jp.value("base", c.pools.base);
  }
  return c;
}

std::string EnvConfig::to_json_text() const {
  ordered_json j;
  j["nvm_bytes"] = nvm_bytes;
  j["cache"] = {{"sets", cache.sets},
                {"ways", cache.ways},
                {"block_size", kBlockSize},
                {"capacity_bytes", cache.capacity_bytes()},
                {"policy", to_string(cache.policy)},
                {"seed", cache.seed}};
  j["tracker_blocks"] = tracker_blocks ? tracker_blocks : cache.capacity_blocks();
  j["pools"] = {{"key_pool_bytes", pools.key_pool_bytes},
                {"field_value_pool_bytes", pools.field_value_pool_bytes},
                {"log_pool_bytes", pools.log_pool_bytes},
                {"metadata_bytes", pools.metadata_bytes},
                {"log_descriptor_bytes", pools.log_descriptor_bytes},
                {"base", pools.base}};
  j["page_layout"] = {{"page_size", layout::kPageSize},
                      {"data_bytes", layout::kDataBytes},
                      {"checksum_bytes", layout::kChecksumBytes},
                      {"column_bytes", layout::kColumnBytes},
                      {"columns", layout::kCols},
                      {"rows", layout::kRows}};
  return j.dump();
}

Env::Env(const EnvConfig& c) : cfg(c), mem(c.nvm_bytes, c.cache) {
  persist = std::make_unique<PersistUnit>(mem, &rc);
  pools = std::make_unique<PoolSet>(mem, c.pools, persist.get(), &rc);
  uint64_t cap = c.tracker_blocks ? c.tracker_blocks : c.cache.capacity_blocks();
  tracker = std::make_unique<LocalityTracker>(cap);
  rt = std::make_unique<TxnRuntime>(mem, *pools, *persist, *tracker, rc);
}

void Env::rebuild_runtime(uint64_t next_txn, uint64_t next_seq) {
  uint64_t cap = cfg.tracker_blocks ? cfg.tracker_blocks : cfg.cache.capacity_blocks();
  rt.reset();
  tracker = std::make_unique<LocalityTracker>(cap);
  rt = std::make_unique<TxnRuntime>(mem, *pools, *persist, *tracker, rc);
  rt->set_next_ids(next_txn, next_seq);
}

std::vector<std::string> preset_names() {
  return {"ycsb-a", "ycsb-b", "ycsb-c", "ycsb-d", "ycsb-e", "ycsb-f",
          "tpcc",   "linkbench", "fieldvalue", "uniform-low-reuse"};
}

Preset get_preset(const std::string& name) {
  Preset p;
  WorkloadSpec& w = p.workload;
  EnvConfig& e = p.env;
  w.name = name;

  // write-heavy presets run against a small cache so the tracker works;
  // read-heavy presets keep their working set inside it
  auto small_env = [&] {
    e.cache.sets = 128;  // 1408 blocks with 11 ways
    e.nvm_bytes = 64 << 20;
    e.pools = {2 << 20, 8 << 20, 8 << 20, 8 << 20, 8 << 20, 0};
  };
  auto roomy_env = [&] {
    e.cache.sets = 512;  // 5632 blocks
    e.nvm_bytes = 64 << 20;
    e.pools = {2 << 20, 8 << 20, 8 << 20, 8 << 20, 8 << 20, 0};
  };

  if (name == "ycsb-a") {
    w.mix = {50, 50, 0, 0, 0, 0};
    w.object_count = 8000;
    small_env();
  } else if (name == "ycsb-b") {
    w.mix = {95, 5, 0, 0, 0, 0};
    w.object_count = 1000;
    roomy_env();
  } else if (name == "ycsb-c") {
    w.mix = {100, 0, 0, 0, 0, 0};
    w.object_count = 1000;
    roomy_env();
  } else if (name == "ycsb-d") {
    w.mix = {95, 0, 5, 0, 0, 0};
    w.object_count = 1000;
    roomy_env();
  } else if (name == "ycsb-e") {
    w.mix = {0, 0, 5, 0, 95, 0};
    w.object_count = 2000;
    roomy_env();
  } else if (name == "ycsb-f") {
    w.mix = {50, 0, 0, 50, 0, 0};
    w.object_count = 8000;
    small_env();
  } else if (name == "tpcc") {
    w.mix = {8, 47, 45, 0, 0, 0};
    w.object_count = 4000;
    small_env();
  } else if (name == "linkbench") {
    w.mix = {64, 16, 12, 0, 4, 4};
    w.object_count = 4000;
    small_env();
  } else if (name == "fieldvalue") {
    w.mix = {0, 100, 0, 0, 0, 0};
    w.object_count = 4000;
    w.field_value_pairs = true;
    w.field_size = 40;
    w.value_size = 80;
    w.distribution = "uniform";
    small_env();
  } else if (name == "uniform-low-reuse") {
    w.mix = {0, 100, 0, 0, 0, 0};
    w.object_count = 50000;
    w.distribution = "uniform";
    w.ops_total = 100000;
    e.cache.sets = 2048;  // 22528 blocks
    e.nvm_bytes = 192 << 20;
    e.pools = {8 << 20, 24 << 20, 24 << 20, 16 << 20, 32 << 20, 0};
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  w.validate();
  return p;
}

Driver::Driver(const Preset& preset, TxnMode mode, bool archapt, EvictionPolicy policy,
               uint64_t seed)
    : preset_(preset), spec_(preset.workload), mode_(mode), archapt_(archapt), seed_(seed),
      gen_(preset.workload) {
  EnvConfig cfg = preset.env;
  cfg.cache.policy = policy;
  cfg.cache.seed = seed;
  spec_.seed = seed;
  gen_ = WorkloadGen(spec_);
  env_ = std::make_unique<Env>(cfg);
}

void Driver::load_phase() {
  uint64_t records = spec_.object_count;
  for (uint64_t i = 0; i < records; ++i) {
    if (spec_.field_value_pairs && !spec_.coalesce) {
      Allocation f = env_->pools->pmalloc(PoolKind::FieldValue, spec_.field_size);
      Allocation v = env_->pools->pmalloc(PoolKind::FieldValue, spec_.value_size);
      objects_.push_back({next_obj_id_++, f.addr, spec_.field_size, 0, {}, 0});
      objects_.push_back({next_obj_id_++, v.addr, spec_.value_size, 0, {}, 0});
    } else if (spec_.field_value_pairs) {
      auto [f, v] = env_->pools->pmalloc_pair(spec_.field_size, spec_.value_size);
      objects_.push_back(
          {next_obj_id_++, f.addr, spec_.field_size + spec_.value_size, 0, {}, 0});
    } else {
      Allocation a = env_->pools->pmalloc(PoolKind::FieldValue, spec_.object_size);
      objects_.push_back({next_obj_id_++, a.addr, spec_.object_size, 0, {}, 0});
    }
  }
  // initial contents, persisted outside any transaction
  for (HObject& o : objects_) {
    o.oracle_value.resize(o.size);
    gen_.fill_payload(o.id, 0, o.oracle_value);
    env_->mem.store(o.addr, o.oracle_value);
    for (uint64_t b = block_base(o.addr); b < o.addr + o.size; b += kBlockSize)
      env_->mem.flush_line(b);
    env_->persist->fold_range(o.addr, o.size);
    Allocation k = env_->pools->pmalloc(PoolKind::Key, 16);
    uint8_t key[16] = {};
    std::memcpy(key, &o.id, sizeof(o.id));
    env_->mem.store(k.addr, key);
    env_->mem.flush_line(k.addr);
    env_->persist->fold_range(k.addr, 16);
  }
  env_->mem.reset_counters();
  env_->rc = RuntimeCounters{};
}

void Driver::do_txn_write(uint64_t txn, HTxn& rec, uint64_t obj_idx,
                          std::vector<uint8_t> value) {
  HObject& o = objects_[obj_idx];
  uint64_t seq = env_->rt->next_seq();
  env_->rt->tx_write(txn, {o.id, o.addr, o.size}, value);
  o.last_write_txn = txn;
  rec.writes.emplace_back(obj_idx, std::move(value));
  rec.write_seqs.push_back(seq);
}

void Driver::insert_object() {
  if (spec_.field_value_pairs && !spec_.coalesce) {
    Allocation f = env_->pools->pmalloc(PoolKind::FieldValue, spec_.field_size);
    Allocation v = env_->pools->pmalloc(PoolKind::FieldValue, spec_.value_size);
    objects_.push_back({next_obj_id_++, f.addr, spec_.field_size, 0,
                        std::vector<uint8_t>(spec_.field_size, 0), 0});
    objects_.push_back({next_obj_id_++, v.addr, spec_.value_size, 0,
                        std::vector<uint8_t>(spec_.value_size, 0), 0});
  } else if (spec_.field_value_pairs) {
    auto [f, v] = env_->pools->pmalloc_pair(spec_.field_size, spec_.value_size);
    uint32_t size = spec_.field_size + spec_.value_size;
    objects_.push_back({next_obj_id_++, f.addr, size, 0, std::vector<uint8_t>(size, 0), 0});
  } else {
    Allocation a = env_->pools->pmalloc(PoolKind::FieldValue, spec_.object_size);
    objects_.push_back({next_obj_id_++, a.addr, spec_.object_size, 0,
                        std::vector<uint8_t>(spec_.object_size, 0), 0});
  }
}

void Driver::settle(uint64_t txn_id, bool committed) {
  auto it = txn_index_.find(txn_id);
  if (it == txn_index_.end()) return;
  HTxn& t = open_txns_[it->second];
  if (t.settled) return;
  t.settled = true;
  if (committed) {
    for (size_t i = 0; i < t.writes.size(); ++i) {
      HObject& o = objects_[t.writes[i].first];
      if (t.write_seqs[i] > o.oracle_seq) {
        o.oracle_seq = t.write_seqs[i];
        o.oracle_value = t.writes[i].second;
      }
    }
  }
  settled_committed_[txn_id] = committed;
}

void Driver::sweep_settled() {
  for (HTxn& t : open_txns_) {
    if (t.settled) continue;
    TxnState s = env_->rt->state(t.id);
    if (s == TxnState::PhysicallyCommitted) settle(t.id, true);
    if (s == TxnState::Aborted) settle(t.id, false);
  }
  // compact
  std::vector<HTxn> keep;
  keep.reserve(open_txns_.size());
  txn_index_.clear();
  for (HTxn& t : open_txns_)
    if (!t.settled) {
      txn_index_[t.id] = keep.size();
      keep.push_back(std::move(t));
    }
  open_txns_ = std::move(keep);
}

void Driver::step() {
  if (done()) return;
  double t0 = now_secs();
  OpKind k = gen_.next_op();
  bool pair_split = spec_.field_value_pairs && !spec_.coalesce;
  uint64_t population = pair_split ? objects_.size() / 2 : objects_.size();

  auto begin_writer = [&](TxnMode mode) {
    uint64_t id = env_->rt->tx_start(mode, archapt_);
    txn_index_[id] = open_txns_.size();
    open_txns_.push_back(HTxn{id, {}, {}, false});
    return id;
  };

  switch (k) {
    case OpKind::Read: {
      uint64_t idx = gen_.pick_key(population);
      uint64_t tx = env_->rt->tx_start(mode_, archapt_);
      if (pair_split) {
        env_->rt->tx_read(tx, {objects_[idx * 2].id, objects_[idx * 2].addr,
                               objects_[idx * 2].size});
        env_->rt->tx_read(tx, {objects_[idx * 2 + 1].id, objects_[idx * 2 + 1].addr,
                               objects_[idx * 2 + 1].size});
      } else {
        env_->rt->tx_read(tx, {objects_[idx].id, objects_[idx].addr, objects_[idx].size});
      }
      env_->rt->tx_lcommit(tx);
      break;
    }
    case OpKind::Update:
    case OpKind::Delete: {
      uint64_t idx = gen_.pick_key(population);
      uint64_t tx = begin_writer(mode_);
      HTxn& rec = open_txns_.back();
      if (pair_split) {
        for (uint64_t part = 0; part < 2; ++part) {
          uint64_t oi = idx * 2 + part;
          std::vector<uint8_t> val(objects_[oi].size);
          if (k == OpKind::Update) gen_.fill_payload(objects_[oi].id, op_index_ + 1, val);
          do_txn_write(tx, rec, oi, std::move(val));
        }
      } else {
        std::vector<uint8_t> val(objects_[idx].size);
        if (k == OpKind::Update) gen_.fill_payload(objects_[idx].id, op_index_ + 1, val);
        do_txn_write(tx, rec, idx, std::move(val));
      }
      env_->rt->tx_lcommit(tx);
      break;
    }
    case OpKind::Insert: {
      insert_object();
      uint64_t tx = begin_writer(mode_);
      HTxn& rec = open_txns_.back();
      if (pair_split) {
        for (uint64_t oi : {objects_.size() - 2, objects_.size() - 1}) {
          std::vector<uint8_t> val(objects_[oi].size);
          gen_.fill_payload(objects_[oi].id, op_index_ + 1, val);
          do_txn_write(tx, rec, oi, std::move(val));
        }
      } else {
        uint64_t oi = objects_.size() - 1;
        std::vector<uint8_t> val(objects_[oi].size);
        gen_.fill_payload(objects_[oi].id, op_index_ + 1, val);
        do_txn_write(tx, rec, oi, std::move(val));
      }
      env_->rt->tx_lcommit(tx);
      break;
    }
    case OpKind::ReadModifyUpdate: {
      uint64_t idx = gen_.pick_key(population);
      uint64_t tx = begin_writer(mode_);
      HTxn& rec = open_txns_.back();
      if (pair_split) {
        for (uint64_t part = 0; part < 2; ++part) {
          uint64_t oi = idx * 2 + part;
          env_->rt->tx_read(tx, {objects_[oi].id, objects_[oi].addr, objects_[oi].size});
          std::vector<uint8_t> val(objects_[oi].size);
          gen_.fill_payload(objects_[oi].id, op_index_ + 1, val);
          do_txn_write(tx, rec, oi, std::move(val));
        }
      } else {
        env_->rt->tx_read(tx, {objects_[idx].id, objects_[idx].addr, objects_[idx].size});
        std::vector<uint8_t> val(objects_[idx].size);
        gen_.fill_payload(objects_[idx].id, op_index_ + 1, val);
        do_txn_write(tx, rec, idx, std::move(val));
      }
      env_->rt->tx_lcommit(tx);
      break;
    }
    case OpKind::Scan: {
      uint64_t base = gen_.pick_key(population);
      uint64_t tx = env_->rt->tx_start(mode_, archapt_);
      for (uint32_t j = 0; j < spec_.scan_length; ++j) {
        uint64_t idx = (base + j) % population;
        uint64_t oi = pair_split ? idx * 2 + 1 : idx;
        env_->rt->tx_read(tx, {objects_[oi].id, objects_[oi].addr, objects_[oi].size});
      }
      env_->rt->tx_lcommit(tx);
      break;
    }
  }
  op_index_++;
  sweep_settled();
  seconds_ += now_secs() - t0;
}

uint64_t Driver::ground_truth_inconsistent() const {
  uint64_t count = 0;
  std::span<const uint8_t> img = env_->mem.image();
  for (const HObject& o : objects_) {
    bool eligible = false;
    if (o.last_write_txn == 0) {
      eligible = true;
    } else {
      auto it = settled_committed_.find(o.last_write_txn);
      if (it != settled_committed_.end())
        eligible = it->second;
      else
        eligible = env_->rt->state(o.last_write_txn) == TxnState::PhysicallyCommitted;
    }
    if (!eligible) continue;
    std::vector<uint8_t> folded = env_->persist->shadow_copy(o.addr, o.size);
    if (std::memcmp(folded.data(), img.data() + o.addr, o.size) != 0) count++;
  }
  return count;
}

bool Driver::durable_matches_oracle() const {
  for (const HObject& o : objects_) {
    std::vector<uint8_t> cur = env_->mem.peek(o.addr, o.size);
    if (cur != o.oracle_value) return false;
  }
  return true;
}

RecoveryReport Driver::crash_and_recover(CrashStats& agg, const RecoveryOptions& opt) {
  uint64_t truth = ground_truth_inconsistent();
  env_->mem.crash();
  RecoveryReport rep = recover(env_->mem, *env_->pools, *env_->persist, &env_->rc, opt);
  rep.inconsistent_objects = truth;

  for (uint64_t t : rep.committed) settle(t, true);
  for (uint64_t t : rep.rolled_back) settle(t, false);
  // anything still open but not mentioned never wrote durable state
  for (HTxn& t : open_txns_)
    if (!t.settled) settle(t.id, false);

  agg.crashes++;
  agg.I += truth;
  agg.DI += rep.detected;
  agg.CC += rep.uncorrectable;
  agg.corrected += rep.corrected;
  agg.rolled_back += rep.rolled_back.size();
  agg.committed += rep.committed.size();
  if (rep.detected != truth) agg.di_mismatches++;
  if (!durable_matches_oracle()) {
    agg.atomicity_failures++;
    atomicity_ok_ = false;
  }

  env_->rebuild_runtime(rep.max_txn + 1, rep.max_seq + 1);
  sweep_settled();
  return rep;
}

void Driver::finish() {
  env_->rt->drain_all();
  env_->rt->sync();
  sweep_settled();
}

RunResult Driver::result() {
  RunResult r;
  r.workload = spec_.name;
  r.mode = mode_;
  r.archapt = archapt_;
  r.policy = env_->cfg.cache.policy;
  r.seed = seed_;
  r.ops_done = op_index_;
  r.seconds = seconds_;
  r.flush = env_->mem.counters();
  r.rc = env_->rc;
  r.crash = crash_agg_;
  r.final_state_matches_oracle = atomicity_ok_ && durable_matches_oracle();
  return r;
}

RunResult run_workload(const Preset& preset, TxnMode mode, bool archapt, EvictionPolicy policy,
                       uint64_t seed, std::ostream* trace) {
  Driver d(preset, mode, archapt, policy, seed);
  if (trace) d.env().mem.set_trace(trace);
  d.load_phase();
  while (!d.done()) d.step();
  d.finish();
  return d.result();
}

RunResult run_crashtest(const Preset& preset, TxnMode mode, EvictionPolicy policy,
                        uint64_t n_crashes, uint64_t seed, const RecoveryOptions& opt) {
  CrashStats agg;
  double secs = 0;
  RunResult last;
  for (uint64_t i = 0; i < n_crashes; ++i) {
    Driver d(preset, mode, true, policy, seed + i);
    d.load_phase();
    uint64_t state = seed * 0x51ed270b + i;
    uint64_t crash_at = 1 + splitmix(state) % preset.workload.ops_total;
    while (!d.done() && d.op_index() < crash_at) d.step();
    d.crash_and_recover(agg, opt);
    RunResult r = d.result();
    secs += r.seconds;
    last = r;
  }
  last.crash = agg;
  last.seconds = secs;
  last.seed = seed;
  return last;
}

MicrobenchResult run_microbench(uint32_t object_size, uint64_t count, uint64_t seed) {
  if (object_size < 64 || object_size > 2048)
    throw ConfigError("microbench object size must be in 64..2048");
  MicrobenchResult res;
  res.object_size = object_size;
  res.count = count;

  EnvConfig cfg;
  cfg.cache.sets = 512;
  uint64_t footprint = count * (uint64_t(object_size) + 512) * 4096 / 3136;
  cfg.pools.field_value_pool_bytes = footprint + (8 << 20);
  cfg.nvm_bytes = cfg.pools.field_value_pool_bytes + (64 << 20);
  Env env(cfg);

  std::vector<Allocation> objs;
  objs.reserve(count);
  for (uint64_t i = 0; i < count; ++i)
    objs.push_back(env.pools->pmalloc(PoolKind::FieldValue, object_size));

  std::vector<uint8_t> val(object_size);
  uint64_t rng = seed;

  auto fill = [&](uint64_t tag) {
    uint64_t s = rng ^ tag;
    for (size_t i = 0; i < val.size(); i += 8) {
      uint64_t v = splitmix(s);
      for (size_t j = 0; j < 8 && i + j < val.size(); ++j) val[i + j] = uint8_t(v >> (8 * j));
    }
  };

  // (a) flush every cache block of every object
  double t0 = now_secs();
  for (uint64_t i = 0; i < count; ++i) {
    fill(i);
    env.mem.store(objs[i].addr, val);
    for (uint64_t b = block_base(objs[i].addr); b < objs[i].addr + object_size; b += kBlockSize)
      classified_flush(env.mem, &env.rc, FlushClass::Object, b);
  }
  res.flush_all_secs = now_secs() - t0;
  res.flush_all_blocks = env.rc.object_flushes;

  // (b) create checksums instead of flushing the object
  uint64_t before = env.rc.checksum_flushes;
  t0 = now_secs();
  for (uint64_t i = 0; i < count; ++i) {
    fill(i + count);
    env.mem.store(objs[i].addr, val);
    env.persist->fold_range(objs[i].addr, object_size);
  }
  res.create_secs = now_secs() - t0;
  res.create_checksum_blocks = env.rc.checksum_flushes - before;

  // (c) update existing checksums after another round of writes
  before = env.rc.checksum_flushes;
  t0 = now_secs();
  for (uint64_t i = 0; i < count; ++i) {
    fill(i + 2 * count);
    env.mem.store(objs[i].addr, val);
    env.persist->fold_range(objs[i].addr, object_size);
  }
  res.update_secs = now_secs() - t0;
  res.update_checksum_blocks = env.rc.checksum_flushes - before;

  // identity update: old == new folds nothing
  before = env.rc.checksum_flushes;
  for (uint64_t i = 0; i < count; ++i) env.persist->fold_range(objs[i].addr, object_size);
  res.identity_update_blocks = env.rc.checksum_flushes - before;

  // one fully packed page: 14 checksum blocks versus 49 data blocks
  {
    EnvConfig c2;
    c2.cache.sets = 64;
    c2.nvm_bytes = 16 << 20;
    c2.pools = {1 << 20, 4 << 20, 1 << 20, 1 << 20, 1 << 20, 0};
    Env env2(c2);
    Allocation page = env2.pools->pmalloc(PoolKind::FieldValue, uint32_t(layout::kDataBytes));
    std::vector<uint8_t> bytes(layout::kDataBytes);
    uint64_t s = seed + 7;
    for (auto& b : bytes) b = uint8_t(splitmix(s));
    env2.mem.store(page.addr, bytes);
    res.full_page_checksum_blocks =
        build_checksums(env2.mem, layout::page_base(page.addr), {0, 1, 2, 3, 4, 5, 6}, &env2.rc);
  }
  return res;
}

std::string MicrobenchResult::to_json_text() const {
  ordered_json j;
  j["object_size"] = object_size;
  j["count"] = count;
  j["flush_all_blocks"] = flush_all_blocks;
  j["create_checksum_blocks"] = create_checksum_blocks;
  j["update_checksum_blocks"] = update_checksum_blocks;
  j["identity_update_blocks"] = identity_update_blocks;
  j["full_page_object_blocks"] = full_page_object_blocks;
  j["full_page_checksum_blocks"] = full_page_checksum_blocks;
  j["full_page_ratio"] = double(full_page_checksum_blocks) / double(full_page_object_blocks);
  j["flush_all_secs"] = flush_all_secs;
  j["create_secs"] = create_secs;
  j["update_secs"] = update_secs;
  return j.dump(2);
}

std::string RunResult::to_json_text() const {
  ordered_json j;
  j["workload"] = workload;
  j["mode"] = mode == TxnMode::Undo ? "undo" : "redo";
  j["archapt"] = archapt;
  j["policy"] = to_string(policy);
  j["seed"] = seed;
  j["ops_done"] = ops_done;
  j["seconds"] = seconds;
  j["ops_per_sec"] = seconds > 0 ? double(ops_done) / seconds : 0.0;
  j["emulator"] = {{"flushes_issued", flush.flushes_issued},
                   {"flushes_skipped", flush.flushes_skipped},
                   {"barriers_issued", flush.barriers_issued},
                   {"lines_flushed", flush.lines_flushed},
                   {"dirty_bytes_flushed", flush.dirty_bytes_flushed},
                   {"writebacks_by_eviction", flush.writebacks_by_eviction},
                   {"average_dirtiness", flush.average_dirtiness()},
                   {"dirtiness_histogram", flush.dirtiness_histogram}};
  j["runtime"] = {{"object_flushes", rc.object_flushes},
                  {"log_flushes", rc.log_flushes},
                  {"marker_flushes", rc.marker_flushes},
                  {"checksum_flushes", rc.checksum_flushes},
                  {"metadata_flushes", rc.metadata_flushes},
                  {"object_flushes_skipped", rc.object_flushes_skipped},
                  {"data_barriers", rc.data_barriers},
                  {"marker_barriers", rc.marker_barriers},
                  {"object_avg_dirtiness", rc.object_avg_dirtiness()},
                  {"writes_deferred", rc.writes_deferred},
                  {"resolved_completed", rc.resolved_completed},
                  {"resolved_skip_evict", rc.resolved_skip_evict},
                  {"resolved_skip_drain", rc.resolved_skip_drain},
                  {"txn_started", rc.txn_started},
                  {"txn_lcommitted", rc.txn_lcommitted},
                  {"txn_pcommitted", rc.txn_pcommitted},
                  {"txn_aborted", rc.txn_aborted}};
  j["skip_fraction"] = skip_fraction();
  j["crash"] = {{"crashes", crash.crashes},
                {"I_obj", crash.I},
                {"DI_obj", crash.DI},
                {"CC_obj", crash.CC},
                {"corrected", crash.corrected},
                {"di_mismatches", crash.di_mismatches},
                {"atomicity_failures", crash.atomicity_failures},
                {"rolled_back", crash.rolled_back},
                {"committed", crash.committed}};
  j["final_state_matches_oracle"] = final_state_matches_oracle;
  return j.dump(2);
}

std::string RunResult::csv_header() {
  return "workload,mode,archapt,policy,seed,ops_done,seconds,flushes_issued,flushes_skipped,"
         "barriers_issued,lines_flushed,dirty_bytes_flushed,writebacks_by_eviction,"
         "average_dirtiness,object_flushes,log_flushes,marker_flushes,checksum_flushes,"
         "metadata_flushes,object_flushes_skipped,data_barriers,marker_barriers,"
         "object_avg_dirtiness,skip_fraction,txn_started,txn_pcommitted,crashes,I_obj,DI_obj,"
         "CC_obj,corrected,atomicity_failures";
}

std::string RunResult::to_csv_row() const {
  std::ostringstream os;
  os << workload << ',' << (mode == TxnMode::Undo ? "undo" : "redo") << ','
     << (archapt ? "on" : "off") << ',' << to_string(policy) << ',' << seed << ',' << ops_done
     << ',' << seconds << ',' << flush.flushes_issued << ',' << flush.flushes_skipped << ','
     << flush.barriers_issued << ',' << flush.lines_flushed << ',' << flush.dirty_bytes_flushed
     << ',' << flush.writebacks_by_eviction << ',' << flush.average_dirtiness() << ','
     << rc.object_flushes << ',' << rc.log_flushes << ',' << rc.marker_flushes << ','
     << rc.checksum_flushes << ',' << rc.metadata_flushes << ',' << rc.object_flushes_skipped
     << ',' << rc.data_barriers << ',' << rc.marker_barriers << ',' << rc.object_avg_dirtiness()
     << ',' << skip_fraction() << ',' << rc.txn_started << ',' << rc.txn_pcommitted << ','
     << crash.crashes << ',' << crash.I << ',' << crash.DI << ',' << crash.CC << ','
     << crash.corrected << ',' << crash.atomicity_failures;
  return os.str();
}

void write_report(const std::vector<RunResult>& results, const std::string& format,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  if (format == "csv") {
    out << RunResult::csv_header() << '\n';
    for (const RunResult& r : results) out << r.to_csv_row() << '\n';
  } else if (format == "json") {
    out << "[\n";
    for (size_t i = 0; i < results.size(); ++i)
      out << results[i].to_json_text() << (i + 1 < results.size() ? ",\n" : "\n");
    out << "]\n";
  } else {
    throw ConfigError("unknown report format: " + format);
  }
}

}  // namespace archapt
