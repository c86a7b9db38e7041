#pragma once

#include <string>

#include "hypertune/kernel.hpp"

namespace hypertune {

struct WorkerOptions {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string node_id;
  std::string node_class = "worker";
  int core_count = 1;
  SyntheticKernelConfig kernel;
};

// Connects to the coordinator, serves bench and step requests with the
// synthetic kernel, and returns when SHUTDOWN arrives. Throws Error
// (ConnectFailure, ProtocolError, WorkerLost) on failures.
void worker_run(const WorkerOptions& options);

}  // namespace hypertune
