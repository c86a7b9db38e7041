#include "hypertune/monitor.hpp"

#include <algorithm>
#include <cmath>

#include "hypertune/errors.hpp"

namespace hypertune {

double decline_index(double reference_speed, double measured_throughput,
                     std::int64_t step_index, std::int64_t steps_per_epoch) {
  const double speed_term =
      (reference_speed - measured_throughput) / reference_speed;
  const double progress_term =
      static_cast<double>(steps_per_epoch - step_index) / static_cast<double>(steps_per_epoch);
  return std::max(0.0, 0.7 * speed_term + 0.3 * progress_term);
}

Monitor::Monitor(MonitorConfig config) : config_(config) {}

void Monitor::set_normal_cpu(const std::string& node_id, double cores) {
  normal_cpu_[node_id] = cores;
}

double Monitor::normal_cpu(const std::string& node_id) const {
  auto it = normal_cpu_.find(node_id);
  if (it == normal_cpu_.end() || !(it->second > 0.0)) {
    fail(Errc::InsufficientWindow, "normal CPU for node " + node_id + " was never recorded");
  }
  return it->second;
}

void Monitor::adopt_plan(const BatchPlan& plan,
                         const std::map<std::string, double>& reference_speeds) {
  if (plan.generation != generation_) {
    state_.clear();  // evidence gathered under an old plan is meaningless
    generation_ = plan.generation;
  }
  for (const auto& [node, speed] : reference_speeds) reference_speed_[node] = speed;
}

MonitorDecision Monitor::observe(const std::vector<StepReport>& reports, const BatchPlan& plan) {
  std::vector<const StepReport*> fresh;
  fresh.reserve(reports.size());
  for (const StepReport& r : reports) {
    if (r.generation < plan.generation) {
      ++discarded_reports_;
      continue;
    }
    if (r.generation > plan.generation) {
      fail(Errc::GenerationMismatch,
           "report from node " + r.node_id + " carries future generation " +
               std::to_string(r.generation) + " (current " + std::to_string(plan.generation) + ")");
    }
    fresh.push_back(&r);
  }
  if (!fresh.empty()) {
    const std::int64_t step = fresh.front()->step_index;
    for (const StepReport* r : fresh) {
      if (r->step_index != step) {
        fail(Errc::GenerationMismatch, "reports span step indices " + std::to_string(step) +
                                           " and " + std::to_string(r->step_index));
      }
    }
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      for (std::size_t j = i + 1; j < fresh.size(); ++j) {
        if (fresh[i]->node_id == fresh[j]->node_id) {
          fail(Errc::GenerationMismatch,
               "two fresh reports from node " + fresh[i]->node_id + " in one step");
        }
      }
    }
  }
  for (const auto& [node, bs] : plan.batch_sizes) {
    const bool present = std::any_of(fresh.begin(), fresh.end(),
                                     [&](const StepReport* r) { return r->node_id == node; });
    if (!present) {
      fail(Errc::MissingReport, "no report from node " + node + " for this step");
    }
  }

  MonitorDecision decision;
  bool any_full_window = false;
  for (const StepReport* r : fresh) {
    const double ref = reference_speed(r->node_id);
    const double decline = (ref - r->measured_throughput) / ref;
    const double index =
        decline_index(ref, r->measured_throughput, r->step_index, plan.steps_per_epoch);
    const bool flagged = decline >= config_.decline_gate && index > config_.index_threshold;

    NodeState& st = state_[r->node_id];
    st.flags.push_back(flagged);
    if (st.flags.size() > static_cast<std::size_t>(kFlagWindow)) st.flags.pop_front();
    st.cpu.push_back(r->cpu_utilization);
    if (st.cpu.size() > static_cast<std::size_t>(kCpuWindow)) st.cpu.pop_front();

    if (flagged) {
      decision.flagged.push_back(
          FlaggedNode{r->node_id, r->measured_throughput, index, cpu_mean(r->node_id)});
    }
    if (st.flags.size() == static_cast<std::size_t>(kFlagWindow) &&
        std::all_of(st.flags.begin(), st.flags.end(), [](bool f) { return f; })) {
      any_full_window = true;
    }
  }
  std::stable_sort(decision.flagged.begin(), decision.flagged.end(),
                   [](const FlaggedNode& a, const FlaggedNode& b) { return a.decline > b.decline; });
  decision.kind = any_full_window ? MonitorDecision::Kind::TerminateEpochAndRetune
                                  : MonitorDecision::Kind::Continue;
  return decision;
}

int Monitor::cpu_retune_hint(const std::string& node_id, int current_batch) const {
  auto it = state_.find(node_id);
  if (it == state_.end() || it->second.cpu.size() < static_cast<std::size_t>(kCpuMeanSpan)) {
    fail(Errc::InsufficientWindow,
         "need at least " + std::to_string(kCpuMeanSpan) + " CPU samples for node " + node_id);
  }
  const double mean = cpu_mean(node_id);
  const double normal = normal_cpu(node_id);
  return std::max(1, static_cast<int>(std::lround(current_batch * mean / normal)));
}

double Monitor::reference_speed(const std::string& node_id) const {
  auto it = reference_speed_.find(node_id);
  if (it == reference_speed_.end() || !(it->second > 0.0)) {
    fail(Errc::MissingReport, "no reference speed for node " + node_id);
  }
  return it->second;
}

double Monitor::cpu_mean(const std::string& node_id, int span) const {
  auto it = state_.find(node_id);
  if (it == state_.end() || it->second.cpu.empty()) return 0.0;
  const auto& cpu = it->second.cpu;
  const std::size_t n = std::min<std::size_t>(cpu.size(), static_cast<std::size_t>(span));
  double sum = 0.0;
  for (std::size_t i = cpu.size() - n; i < cpu.size(); ++i) sum += cpu[i];
  return sum / static_cast<double>(n);
}

int Monitor::cpu_window_size(const std::string& node_id) const {
  auto it = state_.find(node_id);
  return it == state_.end() ? 0 : static_cast<int>(it->second.cpu.size());
}

bool Monitor::all_unflagged_for_full_window() const {
  if (state_.empty()) return false;
  for (const auto& [node, st] : state_) {
    if (st.flags.size() < static_cast<std::size_t>(kFlagWindow)) return false;
    if (std::any_of(st.flags.begin(), st.flags.end(), [](bool f) { return f; })) return false;
  }
  return true;
}

}  // namespace hypertune
