#pragma once

#include <map>
#include <string>
#include <vector>

#include "hypertune/kernel.hpp"
#include "hypertune/net.hpp"
#include "hypertune/scenario.hpp"
#include "hypertune/trace.hpp"

namespace hypertune {

struct CoordinatorOptions {
  int expected_workers = 1;  // total, including the optional self worker
  DatasetSpec dataset;
  ControllerSettings controller;
  int epochs = 1;
  std::uint64_t seed = 0;

  std::vector<int> bench_batch_sizes = {8, 16, 32, 64, 96};
  int steps_per_probe = 3;

  // Per-step report deadline: factor x predicted step time, floored.
  double step_timeout_factor = 10.0;
  double min_step_timeout_s = 2.0;

  // Privacy/storage attributes for known node ids (from the scenario file);
  // workers not listed default to public-only hosts.
  std::vector<NodeProfile> declared_nodes;

  bool include_self_worker = false;
  SyntheticKernelConfig self_kernel;
};

struct CoordinatorResult {
  SimTrace trace;
  bool clean = false;
  std::string error;
  // What the run learned, for offline replay and model export.
  std::vector<NodeProfile> nodes;
  std::map<std::string, SpeedModel> models;
  std::map<std::string, double> normal_cpu;
};

// Accepts expected_workers HELLOs on the listener, benchmarks, plans, then
// drives synchronized steps until all epochs are done. On worker loss,
// timeout or protocol error the partial trace is returned with clean=false.
CoordinatorResult coordinator_run(TcpListener& listener, const CoordinatorOptions& options);

// Offline replay of the control loop over a recorded trace: feeds the
// trace's step reports through a fresh monitor+retuner and returns the
// decision sequence, in the same "<epoch>:<step>:<node>:<decision>" form as
// recorded_decisions. Speed-mode traces only (CPU samples are not recorded
// in the CSV schema).
struct ReplayInputs {
  std::vector<NodeProfile> nodes;
  std::map<std::string, SpeedModel> models;
  DatasetSpec dataset;
  ControllerSettings controller;
  std::map<std::string, double> normal_cpu;
};

std::vector<std::string> recorded_decisions(const SimTrace& trace);
std::vector<std::string> replay_decisions(const SimTrace& trace, const ReplayInputs& inputs);

}  // namespace hypertune
