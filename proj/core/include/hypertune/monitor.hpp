#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "hypertune/planner.hpp"

namespace hypertune {

struct StepReport {
  std::string node_id;
  int generation = 0;
  std::int64_t step_index = 0;  // 0-based within the epoch
  double measured_throughput = 0.0;  // samples/sec, own compute only
  double cpu_utilization = 0.0;      // cores used by the training process
  double wall_time = 0.0;            // seconds

  friend bool operator==(const StepReport&, const StepReport&) = default;
};

// Weighted under-utilization score: 0.7 x relative speed decline plus
// 0.3 x remaining-epoch fraction, clamped below at zero (a node running
// above its reference never yields a negative index).
double decline_index(double reference_speed, double measured_throughput,
                     std::int64_t step_index, std::int64_t steps_per_epoch);

struct MonitorConfig {
  // A step is flagged only when the decline index exceeds this...
  double index_threshold = 0.20;
  // ...and the relative speed decline alone is at least this. Without the
  // gate the progress term flags every fresh epoch at full speed.
  double decline_gate = 0.05;
};

struct FlaggedNode {
  std::string node_id;
  double measured_throughput = 0.0;
  double decline = 0.0;   // current decline index
  double cpu_mean = 0.0;  // mean of the last 5 CPU window entries (0 if none)
};

struct MonitorDecision {
  enum class Kind { Continue, TerminateEpochAndRetune };
  Kind kind = Kind::Continue;
  // Nodes whose latest step is flagged, largest decline index first; the
  // front entry is the node that tripped the hysteresis.
  std::vector<FlaggedNode> flagged;

  bool terminate() const { return kind == Kind::TerminateEpochAndRetune; }
};

// Per-step decision state: reference speeds from the active plan, a 5-slot
// consecutive-flag history and a 10-slot CPU sliding window per node.
// Windows are cleared whenever the plan generation changes. Not thread-safe;
// the coordinator role serializes observe() calls.
class Monitor {
 public:
  static constexpr int kFlagWindow = 5;
  static constexpr int kCpuWindow = 10;
  static constexpr int kCpuMeanSpan = 5;

  explicit Monitor(MonitorConfig config = {});

  // Baseline CPU occupancy of the training process, recorded during
  // benchmarking.
  void set_normal_cpu(const std::string& node_id, double cores);
  double normal_cpu(const std::string& node_id) const;

  // Installs the plan's predicted per-node speeds as monitoring references.
  // A generation change resets flag and CPU histories.
  void adopt_plan(const BatchPlan& plan, const std::map<std::string, double>& reference_speeds);

  // Consumes one synchronized step's reports (one per node). Reports from
  // older generations are discarded and counted, never applied.
  MonitorDecision observe(const std::vector<StepReport>& reports, const BatchPlan& plan);

  // CPU-proportional batch proposal: current_batch x mean(last 5 CPU
  // samples) / normal_cpu.
  int cpu_retune_hint(const std::string& node_id, int current_batch) const;

  double reference_speed(const std::string& node_id) const;
  double cpu_mean(const std::string& node_id, int span = kCpuMeanSpan) const;
  int cpu_window_size(const std::string& node_id) const;
  bool all_unflagged_for_full_window() const;
  std::int64_t discarded_reports() const { return discarded_reports_; }

  const MonitorConfig& config() const { return config_; }

 private:
  struct NodeState {
    std::deque<bool> flags;    // capacity kFlagWindow
    std::deque<double> cpu;    // capacity kCpuWindow
  };

  MonitorConfig config_;
  int generation_ = -1;
  std::map<std::string, double> reference_speed_;
  std::map<std::string, double> normal_cpu_;
  std::map<std::string, NodeState> state_;
  std::int64_t discarded_reports_ = 0;
};

}  // namespace hypertune
