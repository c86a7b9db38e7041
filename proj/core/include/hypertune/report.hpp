#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hypertune/scenario.hpp"
#include "hypertune/trace.hpp"

namespace hypertune {

struct PhaseStat {
  std::string label;
  double start_s = 0.0;
  double end_s = 0.0;
  std::int64_t steps = 0;
  double mean_throughput = 0.0;  // time-weighted cluster samples/sec
};

struct RetuneEvent {
  double time_s = 0.0;
  std::string node_id;
  int old_batch = 0;
  int new_batch = 0;
  int generation = 0;
};

struct RunReport {
  std::string scenario_name;
  std::vector<PhaseStat> phases;
  std::vector<RetuneEvent> retunes;

  // Steady throughput of the best single device running alone; 0 when the
  // scenario has a single node already.
  double single_node_baseline = 0.0;
  // Ratios are 0 when the trace lacks the phases that define them.
  double distributed_over_single = 0.0;
  double tuned_over_untuned = 0.0;

  std::int64_t samples_processed = 0;
  int epochs_run = 0;
  int epochs_early_terminated = 0;
  double total_energy_j = 0.0;

  std::int64_t total_samples = 0;
  std::int64_t never_trained = 0;  // samples with coverage count 0
};

// Segments the trace into phases at workload-event and plan-change
// boundaries and derives the throughput ratios.
RunReport emit_report(const SimTrace& trace, const Scenario& scenario);

void print_report(const RunReport& report, std::ostream& out);

}  // namespace hypertune
