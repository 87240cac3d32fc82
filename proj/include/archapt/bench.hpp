#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "archapt/nvm_cache.hpp"
#include "archapt/pool.hpp"
#include "archapt/recovery.hpp"
#include "archapt/txn.hpp"
#include "archapt/workload.hpp"

namespace archapt {

struct EnvConfig {
  uint64_t nvm_bytes = 64 << 20;
  CacheConfig cache;
  uint64_t tracker_blocks = 0;  // 0 = cache capacity in blocks
  PoolConfig pools;

  static EnvConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// one emulator + runtime instance; rebuildable across crashes
struct Env {
  EnvConfig cfg;
  NvmCache mem;
  RuntimeCounters rc;
  std::unique_ptr<PersistUnit> persist;
  std::unique_ptr<PoolSet> pools;
  std::unique_ptr<LocalityTracker> tracker;
  std::unique_ptr<TxnRuntime> rt;

  explicit Env(const EnvConfig& cfg);
  void rebuild_runtime(uint64_t next_txn, uint64_t next_seq);
};

struct CrashStats {
  uint64_t crashes = 0;
  uint64_t I = 0, DI = 0, CC = 0, corrected = 0;
  uint64_t di_mismatches = 0;       // runs where DI != I
  uint64_t atomicity_failures = 0;  // runs where durable state != oracle
  uint64_t rolled_back = 0, committed = 0;
};

struct RunResult {
  std::string workload;
  TxnMode mode = TxnMode::Undo;
  bool archapt = false;
  EvictionPolicy policy = EvictionPolicy::Lru;
  uint64_t seed = 0;
  uint64_t ops_done = 0;
  double seconds = 0;
  FlushCounters flush;
  RuntimeCounters rc;
  CrashStats crash;
  bool final_state_matches_oracle = true;

  double skip_fraction() const {
    uint64_t denom = flush.flushes_skipped + rc.object_flushes;
    return denom == 0 ? 0.0 : double(flush.flushes_skipped) / double(denom);
  }
  std::string to_json_text() const;
  static std::string csv_header();
  std::string to_csv_row() const;
};

struct Preset {
  WorkloadSpec workload;
  EnvConfig env;
};

std::vector<std::string> preset_names();
Preset get_preset(const std::string& name);

// Drives one workload against one environment. Transactions are one per
// operation; a read-modify-update is a read and a write in one transaction,
// a scan is scan_length reads in one.
class Driver {
 public:
  Driver(const Preset& preset, TxnMode mode, bool archapt, EvictionPolicy policy, uint64_t seed);

  void load_phase();
  void step();  // one operation
  bool done() const { return op_index_ >= spec_.ops_total; }
  uint64_t op_index() const { return op_index_; }

  // crash, measure ground truth, recover, verify, resume
  RecoveryReport crash_and_recover(CrashStats& agg, const RecoveryOptions& opt = {});

  void finish();  // drain + sync
  RunResult result();

  Env& env() { return *env_; }
  uint64_t ground_truth_inconsistent() const;  // I-obj at this instant
  bool durable_matches_oracle() const;

 private:
  struct HObject {
    uint64_t id;
    uint64_t addr;
    uint32_t size;
    uint64_t oracle_seq = 0;  // latest committed write applied to oracle
    std::vector<uint8_t> oracle_value;
    uint64_t last_write_txn = 0;  // 0 = none
  };
  struct HTxn {
    uint64_t id;
    std::vector<std::pair<uint64_t, std::vector<uint8_t>>> writes;  // obj index, value
    std::vector<uint64_t> write_seqs;
    bool settled = false;  // applied to oracle or rolled back
  };

  void do_txn_write(uint64_t txn, HTxn& rec, uint64_t obj_idx, std::vector<uint8_t> value);
  void insert_object();
  void settle(uint64_t txn_id, bool committed);
  void sweep_settled();  // fold freshly physical txns into the oracle

  Preset preset_;
  WorkloadSpec spec_;
  TxnMode mode_;
  bool archapt_;
  uint64_t seed_;
  std::unique_ptr<Env> env_;
  WorkloadGen gen_;
  std::vector<HObject> objects_;
  std::vector<HTxn> open_txns_;  // not yet settled
  std::unordered_map<uint64_t, size_t> txn_index_;
  std::unordered_map<uint64_t, bool> settled_committed_;
  uint64_t op_index_ = 0;
  uint64_t next_obj_id_ = 0;
  CrashStats crash_agg_;
  double seconds_ = 0;
  bool atomicity_ok_ = true;
};

RunResult run_workload(const Preset& preset, TxnMode mode, bool archapt, EvictionPolicy policy,
                       uint64_t seed, std::ostream* trace = nullptr);

// n independent runs, each crashing once at a uniformly random op index
RunResult run_crashtest(const Preset& preset, TxnMode mode, EvictionPolicy policy,
                        uint64_t n_crashes, uint64_t seed, const RecoveryOptions& opt = {});

struct MicrobenchResult {
  uint32_t object_size = 0;
  uint64_t count = 0;
  uint64_t flush_all_blocks = 0;       // flush-every-object strategy
  uint64_t create_checksum_blocks = 0; // checksum creation strategy
  uint64_t update_checksum_blocks = 0; // checksum update strategy
  uint64_t identity_update_blocks = 0; // update with old == new
  uint64_t full_page_object_blocks = 49;
  uint64_t full_page_checksum_blocks = 0;
  double flush_all_secs = 0, create_secs = 0, update_secs = 0;
  std::string to_json_text() const;
};

MicrobenchResult run_microbench(uint32_t object_size, uint64_t count, uint64_t seed);

// results -> files; format json|csv
void write_report(const std::vector<RunResult>& results, const std::string& format,
                  const std::string& path);

}  // namespace archapt
