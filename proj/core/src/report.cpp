#include "hypertune/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>

#include "hypertune/errors.hpp"
#include "hypertune/simengine.hpp"

namespace hypertune {
namespace {

struct StepGroup {
  double start_s = 0.0;
  double end_s = 0.0;
  int generation = 0;
  double cluster_throughput = 0.0;
  std::string event;  // non-empty if any node row carried one
};

// Collapses per-node rows into one entry per synchronized step.
std::vector<StepGroup> collect_steps(const SimTrace& trace) {
  std::vector<StepGroup> groups;
  double prev_end = 0.0;
  std::int64_t cur_step = -1;
  int cur_epoch = -1;
  for (const TraceRow& r : trace.rows) {
    if (r.step < 0 || r.cluster_throughput <= 0.0) continue;  // plan/marker rows
    if (r.epoch != cur_epoch || r.step != cur_step) {
      StepGroup g;
      g.start_s = prev_end;
      g.end_s = r.time_s;
      g.generation = r.generation;
      g.cluster_throughput = r.cluster_throughput;
      groups.push_back(g);
      cur_epoch = r.epoch;
      cur_step = r.step;
      prev_end = r.time_s;
    }
    if (!r.event.empty()) {
      StepGroup& g = groups.back();
      if (!g.event.empty()) g.event += ";";
      g.event += r.node_id + " " + r.event;
    }
  }
  return groups;
}

double best_single_device_throughput(const Scenario& sc) {
  // Steady throughput of the strongest single device on the full dataset.
  const NodeProfile* best = nullptr;
  double best_peak = -1.0;
  for (const NodeProfile& n : sc.nodes) {
    const double peak = sc.models.at(n.node_class).peak_throughput();
    if (peak > best_peak) {
      best_peak = peak;
      best = &n;
    }
  }
  Scenario solo;
  solo.name = sc.name + "-single";
  solo.seed = sc.seed;
  solo.epochs = 1;
  solo.timing_noise = 0.0;
  solo.nodes = {*best};
  solo.nodes.front().owned_private_samples = 0;  // the solo dataset is all public
  solo.models.emplace(best->node_class, sc.models.at(best->node_class));
  solo.dataset.total_samples = sc.dataset.total_samples;
  solo.dataset.public_samples = sc.dataset.total_samples;
  solo.controller.enabled = false;
  const SimTrace trace = run(solo);
  double time = 0.0;
  for (const StepGroup& g : collect_steps(trace)) time = g.end_s;
  return time > 0.0 ? static_cast<double>(trace.summary.samples_processed) / time : 0.0;
}

}  // namespace

RunReport emit_report(const SimTrace& trace, const Scenario& scenario) {
  if (trace.rows.empty()) fail(Errc::EmptyTrace, "cannot report on an empty trace");

  RunReport report;
  report.scenario_name = scenario.name;
  report.samples_processed = trace.summary.samples_processed;
  report.epochs_run = trace.summary.epochs_run;
  report.epochs_early_terminated = trace.summary.epochs_early_terminated;
  report.total_energy_j = trace.summary.total_energy_j;
  report.total_samples = static_cast<std::int64_t>(trace.summary.coverage_counts.size());
  for (std::uint32_t c : trace.summary.coverage_counts) {
    if (c == 0) ++report.never_trained;
  }

  const std::vector<StepGroup> steps = collect_steps(trace);
  if (steps.empty()) fail(Errc::EmptyTrace, "trace has no completed steps");

  // Phase boundaries: first step, any step with a workload event, any
  // generation change.
  std::size_t last_retune_phase = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const StepGroup& g = steps[i];
    const bool gen_changed = i > 0 && g.generation != steps[i - 1].generation;
    std::string label;
    if (i == 0) {
      label = "initial";
    } else if (!g.event.empty()) {
      label = "event " + g.event;
      if (gen_changed) label += "+gen=" + std::to_string(g.generation);
    } else if (gen_changed) {
      label = "retune gen=" + std::to_string(g.generation);
    }
    if (!label.empty()) {
      if (label.rfind("retune", 0) == 0) last_retune_phase = report.phases.size();
      PhaseStat phase;
      phase.label = label;
      phase.start_s = g.start_s;
      report.phases.push_back(phase);
    }
    PhaseStat& phase = report.phases.back();
    phase.end_s = g.end_s;
    phase.steps += 1;
    // Accumulate samples into mean_throughput, normalized below.
    phase.mean_throughput += g.cluster_throughput * (g.end_s - g.start_s);
  }
  for (PhaseStat& p : report.phases) {
    const double duration = p.end_s - p.start_s;
    p.mean_throughput = duration > 0.0 ? p.mean_throughput / duration : 0.0;
  }

  if (scenario.nodes.size() > 1) {
    report.single_node_baseline = best_single_device_throughput(scenario);
    if (report.single_node_baseline > 0.0) {
      report.distributed_over_single =
          report.phases.front().mean_throughput / report.single_node_baseline;
    }
  }
  if (last_retune_phase > 0 && last_retune_phase < report.phases.size()) {
    const double untuned = report.phases[last_retune_phase - 1].mean_throughput;
    if (untuned > 0.0) {
      report.tuned_over_untuned =
          report.phases[last_retune_phase].mean_throughput / untuned;
    }
  }

  // Retune events reconstructed from PLAN rows.
  std::map<std::string, int> batch_of;
  for (const TraceRow& r : trace.rows) {
    if (r.step != -1) continue;
    int gen = 0, bs = 0;
    std::int64_t share = 0, steps_per_epoch = 0;
    if (!parse_plan_decision(r.decision, gen, bs, share, steps_per_epoch)) continue;
    auto it = batch_of.find(r.node_id);
    if (it != batch_of.end() && it->second != bs) {
      report.retunes.push_back(RetuneEvent{r.time_s, r.node_id, it->second, bs, gen});
    }
    batch_of[r.node_id] = bs;
  }
  return report;
}

void print_report(const RunReport& report, std::ostream& out) {
  char buf[256];
  out << "scenario: " << report.scenario_name << "\n";
  out << "phases:\n";
  for (const PhaseStat& p : report.phases) {
    std::snprintf(buf, sizeof(buf), "  %-40s  %10.2f s .. %10.2f s  %6lld steps  %8.2f samples/s",
                  p.label.c_str(), p.start_s, p.end_s, static_cast<long long>(p.steps),
                  p.mean_throughput);
    out << buf << "\n";
  }
  if (!report.retunes.empty()) {
    out << "retunes:\n";
    for (const RetuneEvent& r : report.retunes) {
      std::snprintf(buf, sizeof(buf), "  t=%.2f s  %s: batch %d -> %d (gen %d)", r.time_s,
                    r.node_id.c_str(), r.old_batch, r.new_batch, r.generation);
      out << buf << "\n";
    }
  }
  if (report.single_node_baseline > 0.0) {
    std::snprintf(buf, sizeof(buf), "single-node baseline: %.2f samples/s",
                  report.single_node_baseline);
    out << buf << "\n";
    std::snprintf(buf, sizeof(buf), "distributed / single-node: %.3fx",
                  report.distributed_over_single);
    out << buf << "\n";
  }
  if (report.tuned_over_untuned > 0.0) {
    std::snprintf(buf, sizeof(buf), "tuned / untuned: %.3fx", report.tuned_over_untuned);
    out << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf),
                "samples processed: %lld over %d epochs (%d terminated early)",
                static_cast<long long>(report.samples_processed), report.epochs_run,
                report.epochs_early_terminated);
  out << buf << "\n";
  if (report.total_samples > 0) {
    std::snprintf(buf, sizeof(buf), "coverage: %lld of %lld samples never trained",
                  static_cast<long long>(report.never_trained),
                  static_cast<long long>(report.total_samples));
    out << buf << "\n";
  }
  if (report.total_energy_j > 0.0) {
    std::snprintf(buf, sizeof(buf), "energy proxy: %.1f J", report.total_energy_j);
    out << buf << "\n";
  }
}

}  // namespace hypertune
