#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hypertune/monitor.hpp"
#include "hypertune/planner.hpp"
#include "hypertune/retuner.hpp"
#include "hypertune/speed_model.hpp"

namespace hypertune {

// External workload taking cores_taken cores on one node from at_time on;
// cores_taken = 0 releases the node back to nominal capacity.
struct WorkloadEvent {
  double at_time = 0.0;
  std::string node_id;
  int cores_taken = 0;

  friend bool operator==(const WorkloadEvent&, const WorkloadEvent&) = default;
};

// How a node class behaves under a given external core load: either a
// capacity factor applied to the nominal curve or an explicitly measured
// degraded table. Contention is not linear in cores, so fixtures usually
// carry tables.
struct Degradation {
  bool is_factor = true;
  double factor = 1.0;
  SpeedModel model;
};

struct ControllerSettings {
  bool enabled = true;
  RetunePolicy policy;
  MonitorConfig monitor;
};

// Scripted early termination: end the given epoch after `step` completed
// steps, regardless of monitor state. Used for coverage experiments.
struct ForcedTermination {
  int epoch = 0;
  std::int64_t step = 0;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  int epochs = 1;
  double timing_noise = 0.01;  // multiplicative U(1-e, 1+e) on step times
  double joules_per_step = 0.0;  // abstract energy proxy; 0 disables

  std::vector<NodeProfile> nodes;
  std::map<std::string, SpeedModel> models;  // node_class -> nominal curve
  std::map<std::string, std::map<int, Degradation>> degradation;  // class -> cores_taken
  DatasetSpec dataset;
  std::vector<WorkloadEvent> events;  // sorted by at_time
  ControllerSettings controller;
  std::vector<ForcedTermination> forced_terminations;

  void validate() const;
  const NodeProfile& node(const std::string& node_id) const;
  const SpeedModel& model_of(const std::string& node_id) const;
  // Active curve for a node under cores_taken external load.
  SpeedModel active_model(const std::string& node_id, int cores_taken) const;
};

// Scenario file: whole-line comments with '#', a key-value preamble (name,
// seed, epochs, noise, joules_per_step), then [nodes], [models],
// [degradation], [dataset], [events], [controller] and optional
// [terminations] sections. See README for the field reference.
Scenario parse_scenario(std::istream& in, const std::string& origin);
Scenario load_scenario(const std::string& path);

}  // namespace hypertune
