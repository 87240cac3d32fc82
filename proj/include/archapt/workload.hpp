#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "archapt/errors.hpp"

namespace archapt {

enum class OpKind { Read, Update, Insert, ReadModifyUpdate, Scan, Delete };

struct OpMix {
  double read = 0, update = 0, insert = 0, rmu = 0, scan = 0, del = 0;
  double sum() const { return read + update + insert + rmu + scan + del; }
};

struct WorkloadSpec {
  std::string name;
  OpMix mix;
  uint64_t object_count = 1000;
  uint32_t object_size = 100;
  std::string distribution = "zipfian";  // uniform | zipfian
  double theta = 0.99;
  uint64_t ops_total = 10000;
  uint64_t seed = 1;
  uint32_t scan_length = 10;

  // field/value pair layout; when set, objects are field+value pairs and
  // `coalesce` chooses the pair allocator versus two independent ones
  bool field_value_pairs = false;
  bool coalesce = true;
  uint32_t field_size = 40;
  uint32_t value_size = 80;

  void validate() const;
  bool read_heavy() const { return mix.read >= 95.0; }

  static WorkloadSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// deterministic stream: op kinds, key picks, payload bytes
class WorkloadGen {
 public:
  WorkloadGen(const WorkloadSpec& spec);

  OpKind next_op();
  uint64_t pick_key(uint64_t population);  // in [0, population)
  void fill_payload(uint64_t object_id, uint64_t op_index, std::vector<uint8_t>& out);

 private:
  double next_unit();  // [0, 1)
  uint64_t zipf(uint64_t n);

  WorkloadSpec spec_;
  uint64_t state_;
  // incremental zeta for a growing population
  uint64_t zeta_n_ = 0;
  double zeta_ = 0.0;
};

}  // namespace archapt
