#include "archapt/workload.hpp"

#include <cmath>

#include "json.hpp"

namespace archapt {

void WorkloadSpec::validate() const {
  double s = mix.sum();
  if (std::abs(s - 100.0) > 1e-9) throw ConfigError("op mix must sum to 100, got " + std::to_string(s));
  for (double v : {mix.read, mix.update, mix.insert, mix.rmu, mix.scan, mix.del})
    if (v < 0) throw ConfigError("op mix percentages must be non-negative");
  if (object_count == 0) throw ConfigError("object_count must be positive");
  if (object_size == 0) throw ConfigError("object_size must be positive");
  if (distribution != "uniform" && distribution != "zipfian")
    throw ConfigError("distribution must be uniform or zipfian");
  if (field_value_pairs && (field_size == 0 || value_size == 0))
    throw ConfigError("pair sizes must be positive");
}

WorkloadSpec WorkloadSpec::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  WorkloadSpec s;
  s.name = j.value("name", "custom");
  auto m = j.at("op_mix");
  s.mix.read = m.value("read", 0.0);
  s.mix.update = m.value("update", 0.0);
  s.mix.insert = m.value("insert", 0.0);
  s.mix.rmu = m.value("rmu", 0.0);
  s.mix.scan = m.value("scan", 0.0);
  s.mix.del = m.value("delete", 0.0);
  s.object_count = j.value("object_count", uint64_t(1000));
  s.object_size = j.value("object_size", uint32_t(100));
  s.distribution = j.value("distribution", std::string("zipfian"));
  s.theta = j.value("theta", 0.99);
  s.ops_total = j.value("ops_total", uint64_t(10000));
  s.seed = j.value("seed", uint64_t(1));
  s.scan_length = j.value("scan_length", uint32_t(10));
  s.field_value_pairs = j.value("field_value_pairs", false);
  s.coalesce = j.value("coalesce", true);
  s.field_size = j.value("field_size", uint32_t(40));
  s.value_size = j.value("value_size", uint32_t(80));
  s.validate();
  return s;
}

std::string WorkloadSpec::to_json_text() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["op_mix"] = {{"read", mix.read},   {"update", mix.update}, {"insert", mix.insert},
                 {"rmu", mix.rmu},     {"scan", mix.scan},     {"delete", mix.del}};
  j["object_count"] = object_count;
  j["object_size"] = object_size;
  j["distribution"] = distribution;
  j["theta"] = theta;
  j["ops_total"] = ops_total;
  j["seed"] = seed;
  j["scan_length"] = scan_length;
  j["field_value_pairs"] = field_value_pairs;
  j["coalesce"] = coalesce;
  j["field_size"] = field_size;
  j["value_size"] = value_size;
  return j.dump();
}

namespace {
uint64_t splitmix(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

WorkloadGen::WorkloadGen(const WorkloadSpec& spec) : spec_(spec), state_(spec.seed * 2 + 1) {}

double WorkloadGen::next_unit() {
  return double(splitmix(state_) >> 11) * 0x1.0p-53;
}

OpKind WorkloadGen::next_op() {
  double r = next_unit() * 100.0;
  const OpMix& m = spec_.mix;
  if ((r -= m.read) < 0) return OpKind::Read;
  if ((r -= m.update) < 0) return OpKind::Update;
  if ((r -= m.insert) < 0) return OpKind::Insert;
  if ((r -= m.rmu) < 0) return OpKind::ReadModifyUpdate;
  if ((r -= m.scan) < 0) return OpKind::Scan;
  return OpKind::Delete;
}

uint64_t WorkloadGen::zipf(uint64_t n) {
  if (zeta_n_ > n) {  // population shrank (should not happen); recompute
    zeta_ = 0.0;
    zeta_n_ = 0;
  }
  while (zeta_n_ < n) {
    zeta_n_++;
    zeta_ += 1.0 / std::pow(double(zeta_n_), spec_.theta);
  }
  // constant-time draw (Gray et al.)
  double theta = spec_.theta;
  double alpha = 1.0 / (1.0 - theta);
  double zeta2 = 1.0 + 1.0 / std::pow(2.0, theta);
  double eta = (1.0 - std::pow(2.0 / double(n), 1.0 - theta)) / (1.0 - zeta2 / zeta_);
  double u = next_unit();
  double uz = u * zeta_;
  if (uz < 1.0) return 0;
  if (uz < 1.0 + std::pow(0.5, theta)) return 1;
  uint64_t k = uint64_t(double(n) * std::pow(eta * u - eta + 1.0, alpha));
  return k >= n ? n - 1 : k;
}

uint64_t WorkloadGen::pick_key(uint64_t population) {
  if (population == 0) throw UsageError("empty population");
  if (spec_.distribution == "uniform") return splitmix(state_) % population;
  // scramble the zipfian rank so hot keys spread over the table
  uint64_t rank = zipf(population);
  return (rank * 0x9e3779b97f4a7c15ULL >> 17) % population;
}

void WorkloadGen::fill_payload(uint64_t object_id, uint64_t op_index, std::vector<uint8_t>& out) {
  uint64_t s = spec_.seed ^ (object_id * 0xc2b2ae3d27d4eb4fULL) ^ (op_index + 1);
  for (size_t i = 0; i < out.size(); i += 8) {
    uint64_t v = splitmix(s);
    for (size_t j = 0; j < 8 && i + j < out.size(); ++j) out[i + j] = uint8_t(v >> (8 * j));
  }
}

}  // namespace archapt
