#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hypertune/monitor.hpp"
#include "hypertune/planner.hpp"
#include "hypertune/speed_model.hpp"

namespace hypertune {

struct RetunePolicy {
  enum class Mode { SpeedInterpolation, CpuProportional };

  Mode mode = Mode::SpeedInterpolation;
  double clamp_low = 0.5;   // fraction of the generation-0 batch
  double clamp_high = 1.5;
  bool eq3_literal = false;    // swapped-weight inverse interpolation variant
  bool naive_inverse = false;  // diagnostic: invert the nominal curve directly
};

struct RetuneResult {
  BatchPlan plan;
  // Post-retune expected throughput per node, to be installed as the
  // monitor's references. Retuned nodes use their inferred degraded curve,
  // all others keep their previous reference.
  std::map<std::string, double> expected_speeds;
};

// Computes replacement batch sizes for every flagged node, clamps them
// against the generation-0 batches, and returns the replacement plan.
// Unflagged nodes keep their batch sizes.
RetuneResult retune(const BatchPlan& plan, const MonitorDecision& decision,
                    const std::vector<NodeProfile>& nodes,
                    const std::map<std::string, SpeedModel>& models, const Monitor& monitor,
                    const RetunePolicy& policy, const DatasetSpec& dataset,
                    const std::map<std::string, int>& initial_batches);

// CPU-mode recovery path: when a previously-downscaled node's CPU is back to
// normal, propose restoring its batch toward the generation-0 value. Returns
// nothing when no node qualifies.
std::optional<std::map<std::string, int>> upscale_check(
    const BatchPlan& plan, const Monitor& monitor, const RetunePolicy& policy,
    const std::map<std::string, int>& initial_batches);

}  // namespace hypertune
