#include "hypertune/retuner.hpp"

#include <algorithm>
#include <cmath>

#include "hypertune/errors.hpp"
#include "hypertune/log.hpp"

namespace hypertune {
namespace {

const SpeedModel& model_for(const std::string& node_id, const std::vector<NodeProfile>& nodes,
                            const std::map<std::string, SpeedModel>& models) {
  for (const NodeProfile& n : nodes) {
    if (n.node_id == node_id) {
      auto it = models.find(n.node_class);
      if (it == models.end()) fail(Errc::MissingModel, "no speed model for class " + n.node_class);
      return it->second;
    }
  }
  fail(Errc::MissingModel, "unknown node " + node_id);
}

int clamp_batch(int proposed, int initial_batch, const RetunePolicy& policy) {
  const int lo = std::max(1, static_cast<int>(std::lround(policy.clamp_low * initial_batch)));
  const int hi = std::max(lo, static_cast<int>(std::lround(policy.clamp_high * initial_batch)));
  return std::clamp(proposed, lo, hi);
}

}  // namespace

RetuneResult retune(const BatchPlan& plan, const MonitorDecision& decision,
                    const std::vector<NodeProfile>& nodes,
                    const std::map<std::string, SpeedModel>& models, const Monitor& monitor,
                    const RetunePolicy& policy, const DatasetSpec& dataset,
                    const std::map<std::string, int>& initial_batches) {
  if (decision.flagged.empty()) {
    fail(Errc::NoEvidence, "retune called without flagged-node evidence");
  }

  std::map<std::string, int> new_batches = plan.batch_sizes;
  std::map<std::string, double> expected = {};
  for (const auto& [node, bs] : plan.batch_sizes) {
    expected[node] = monitor.reference_speed(node);
  }

  const double target_step_time = plan.predicted_step_time;
  for (const FlaggedNode& flagged : decision.flagged) {
    const SpeedModel& model = model_for(flagged.node_id, nodes, models);
    const int old_batch = plan.batch_sizes.at(flagged.node_id);
    auto init_it = initial_batches.find(flagged.node_id);
    if (init_it == initial_batches.end()) {
      fail(Errc::NoEvidence, "no generation-0 batch recorded for node " + flagged.node_id);
    }

    int proposed;
    double expected_speed;
    // Scale the node's whole curve so it passes through the measured
    // (old_batch, throughput) point, then re-equalize on that curve.
    const double alpha =
        std::min(1.0, flagged.measured_throughput / model.speed_at(old_batch));
    if (policy.mode == RetunePolicy::Mode::CpuProportional) {
      proposed = monitor.cpu_retune_hint(flagged.node_id, old_batch);
    } else if (policy.naive_inverse) {
      // First-cut diagnostic: read the nominal curve backwards at the
      // measured speed. Known to under-set the batch on a degraded node.
      const double target = std::clamp(flagged.measured_throughput, model.min_throughput(),
                                       model.max_throughput());
      proposed = model.batch_for_speed(target, policy.eq3_literal);
    } else {
      proposed = equalize_batch(model, target_step_time, alpha).batch_size;
    }
    const int clamped = clamp_batch(proposed, init_it->second, policy);
    new_batches[flagged.node_id] = clamped;
    // The clamp can land outside the probed range; read the nearest knot.
    const double lookup =
        std::clamp<double>(clamped, model.min_batch(), model.max_batch());
    expected_speed = alpha * model.speed_at(lookup);
    expected[flagged.node_id] = expected_speed;
    log_info("retune " + flagged.node_id + ": batch " + std::to_string(old_batch) + " -> " +
             std::to_string(clamped) + " (alpha " + std::to_string(alpha) + ")");
  }

  RetuneResult result;
  result.plan = replan(plan, new_batches, dataset);
  result.expected_speeds = std::move(expected);
  return result;
}

std::optional<std::map<std::string, int>> upscale_check(
    const BatchPlan& plan, const Monitor& monitor, const RetunePolicy& policy,
    const std::map<std::string, int>& initial_batches) {
  if (policy.mode != RetunePolicy::Mode::CpuProportional) return std::nullopt;
  if (!monitor.all_unflagged_for_full_window()) return std::nullopt;

  std::map<std::string, int> proposals;
  for (const auto& [node, batch] : plan.batch_sizes) {
    auto init_it = initial_batches.find(node);
    if (init_it == initial_batches.end() || batch >= init_it->second) continue;
    if (monitor.cpu_window_size(node) < Monitor::kCpuMeanSpan) continue;
    const double mean = monitor.cpu_mean(node);
    if (mean < 0.98 * monitor.normal_cpu(node)) continue;
    // Restore toward the generation-0 batch, proportionally to the capacity
    // that actually came back.
    const int restored =
        std::min(init_it->second, monitor.cpu_retune_hint(node, init_it->second));
    if (restored > batch) proposals[node] = restored;
  }
  if (proposals.empty()) return std::nullopt;
  return proposals;
}

}  // namespace hypertune
