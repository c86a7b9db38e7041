#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hypertune/speed_model.hpp"

namespace hypertune {

struct NodeProfile {
  std::string node_id;
  std::string node_class;  // keys into the speed model map
  int core_count = 1;
  bool is_storage_node = false;  // CSD-style node holding data locally
  std::int64_t owned_private_samples = 0;

  friend bool operator==(const NodeProfile&, const NodeProfile&) = default;
};

// Dataset description. Sample ids form one contiguous space [0, total):
// private blocks first, laid out in ascending owner node_id order, then the
// public block.
struct DatasetSpec {
  std::int64_t total_samples = 0;
  std::map<std::string, std::int64_t> private_samples;  // node_id -> count
  std::int64_t public_samples = 0;

  struct IdRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;
    std::int64_t size() const { return end - begin; }
  };

  void validate() const;
  std::int64_t private_count(const std::string& node_id) const;
  IdRange private_range(const std::string& node_id) const;
  IdRange public_range() const;
};

struct BatchPlan {
  int generation = 0;
  std::map<std::string, int> batch_sizes;             // node_id -> BS_i
  std::map<std::string, std::int64_t> dataset_shares;  // node_id -> sample count
  std::int64_t steps_per_epoch = 0;
  double predicted_step_time = 0.0;  // seconds, barrier wall time

  std::int64_t total_batch() const;
  // Offset of a node's share in the per-generation concatenated share order
  // (ascending node_id). This is what the PLAN wire message carries.
  std::int64_t share_offset(const std::string& node_id) const;
};

// The node class maximizing peak model throughput x device count; ties break
// to the larger per-device peak, then the lexicographically smaller class.
std::string select_anchor(const std::vector<NodeProfile>& nodes,
                          const std::map<std::string, SpeedModel>& models);

struct EqualizeResult {
  int batch_size = 0;
  bool exact = false;  // true if a segment solution matched the target exactly
};

// Smallest-error batch size whose step time batch/(capacity_factor *
// speed(batch)) equals target_step_time. Each linear segment SP = a*BS + b
// gives the closed form BS = T*b' / (1 - T*a') on the scaled curve; if no
// segment contains its own solution, the knot with the nearest step time is
// used instead.
EqualizeResult equalize_batch(const SpeedModel& model, double target_step_time,
                              double capacity_factor = 1.0);

BatchPlan plan_initial(const std::vector<NodeProfile>& nodes,
                       const std::map<std::string, SpeedModel>& models,
                       const DatasetSpec& dataset);

// New plan with generation+1: shares and steps recomputed for the new batch
// sizes exactly as in plan_initial; privacy pinning preserved.
BatchPlan replan(const BatchPlan& previous,
                 const std::map<std::string, int>& new_batch_sizes,
                 const DatasetSpec& dataset);

// "PLAN gen=<g> bs=<b> share=<s> steps=<n>" as written into trace rows.
std::string plan_decision_string(const BatchPlan& plan, const std::string& node_id);
bool parse_plan_decision(const std::string& decision, int& generation, int& batch_size,
                         std::int64_t& share, std::int64_t& steps_per_epoch);

}  // namespace hypertune
