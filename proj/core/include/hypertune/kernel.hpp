#pragma once

#include <cstdint>
#include <vector>

#include "hypertune/speed_model.hpp"

namespace hypertune {

struct SyntheticKernelConfig {
  // Arithmetic work per sample; step cost = overhead + batch * per-sample.
  std::uint64_t flops_per_sample = 200000;
  std::uint64_t step_overhead_flops = 2000000;
  // Working-set bytes touched per sample, spread over a shared buffer.
  std::uint64_t bytes_per_sample = 4096;
  int threads = 1;
};

// CPU-bound stand-in for a training step. Real OS contention slows it down
// the same way it would slow real training, which is what the controller
// reacts to. The kernel reports its own CPU occupancy (cores) for the last
// step, measured from per-thread CPU clocks.
class SyntheticKernel : public WorkloadExecutor {
 public:
  explicit SyntheticKernel(SyntheticKernelConfig config = {});

  double run_timed_step(int batch_size) override;
  // Cores used by the kernel during the last run_timed_step call.
  double last_cpu_utilization() const { return last_cpu_utilization_; }

 private:
  SyntheticKernelConfig config_;
  std::vector<double> buffer_;
  double last_cpu_utilization_ = 0.0;
};

}  // namespace hypertune
