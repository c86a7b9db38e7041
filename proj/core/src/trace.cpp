#include "hypertune/trace.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hypertune/errors.hpp"

namespace hypertune {

const char* const kTraceCsvHeader =
    "time_s,epoch,step,generation,node_id,throughput,cluster_throughput,event,decision";

void write_trace_csv(const SimTrace& trace, std::ostream& out) {
  out << kTraceCsvHeader << "\n";
  char buf[160];
  for (const TraceRow& r : trace.rows) {
    // Fixed precision keeps equal-seed runs byte-identical.
    std::snprintf(buf, sizeof(buf), "%.6f,%d,%" PRId64 ",%d,", r.time_s, r.epoch, r.step,
                  r.generation);
    out << buf << r.node_id << ",";
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,", r.throughput, r.cluster_throughput);
    out << buf << r.event << "," << r.decision << "\n";
  }
}

void write_trace_csv(const SimTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::ScenarioError, "cannot write trace file " + path);
  write_trace_csv(trace, out);
}

SimTrace read_trace_csv(std::istream& in) {
  SimTrace trace;
  std::string line;
  if (!std::getline(in, line)) fail(Errc::EmptyTrace, "trace stream is empty");
  if (line != kTraceCsvHeader) fail(Errc::ScenarioError, "unexpected trace header: " + line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    while (cells.size() < 9) cells.emplace_back();
    if (cells.size() != 9) {
      fail(Errc::ScenarioError, "trace line " + std::to_string(line_no) + " has " +
                                    std::to_string(cells.size()) + " cells");
    }
    TraceRow r;
    try {
      r.time_s = std::stod(cells[0]);
      r.epoch = std::stoi(cells[1]);
      r.step = std::stoll(cells[2]);
      r.generation = std::stoi(cells[3]);
      r.node_id = cells[4];
      r.throughput = std::stod(cells[5]);
      r.cluster_throughput = std::stod(cells[6]);
      r.event = cells[7];
      r.decision = cells[8];
    } catch (const std::exception& e) {
      fail(Errc::ScenarioError,
           "trace line " + std::to_string(line_no) + ": " + e.what());
    }
    trace.rows.push_back(std::move(r));
  }
  return trace;
}

SimTrace load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ScenarioError, "cannot open trace file " + path);
  return read_trace_csv(in);
}

}  // namespace hypertune
