#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hypertune {

// One CSV row. Per synchronized step there is one row per node; plan rows
// (emitted after every replan) carry step = -1 and zero throughputs.
struct TraceRow {
  double time_s = 0.0;
  int epoch = 0;
  std::int64_t step = 0;
  int generation = 0;
  std::string node_id;
  double throughput = 0.0;          // node's own compute throughput
  double cluster_throughput = 0.0;  // sum(BS) / barrier wall time
  std::string event;     // "workload cores=<k>" when one applies at this step
  std::string decision;  // "FLAG", "TERMINATE", "PLAN gen=.. bs=.. share=.. steps=.."

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct SimSummary {
  std::int64_t samples_processed = 0;
  int epochs_run = 0;
  int epochs_early_terminated = 0;
  std::int64_t steps_completed = 0;
  std::int64_t discarded_reports = 0;
  double total_energy_j = 0.0;  // joules_per_step proxy; 0 when disabled
  // How many epochs included each sample in a completed step; indexed by
  // sample id. Empty when the scenario has no dataset tracking.
  std::vector<std::uint32_t> coverage_counts;
};

struct SimTrace {
  std::vector<TraceRow> rows;
  SimSummary summary;
};

// Fixed CSV schema:
// time_s,epoch,step,generation,node_id,throughput,cluster_throughput,event,decision
extern const char* const kTraceCsvHeader;

void write_trace_csv(const SimTrace& trace, std::ostream& out);
void write_trace_csv(const SimTrace& trace, const std::string& path);
// Parses rows only; the summary is not stored in the CSV.
SimTrace read_trace_csv(std::istream& in);
SimTrace load_trace_csv(const std::string& path);

}  // namespace hypertune
