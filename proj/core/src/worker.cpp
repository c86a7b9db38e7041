#include "hypertune/worker.hpp"

#include <algorithm>
#include <vector>

#include "hypertune/errors.hpp"
#include "hypertune/log.hpp"
#include "hypertune/net.hpp"
#include "hypertune/wire.hpp"

namespace hypertune {

void worker_run(const WorkerOptions& options) {
  TcpStream stream = TcpStream::connect(options.host, options.port);
  HelloMsg hello;
  hello.version = kProtocolVersion;
  hello.node_id = options.node_id;
  hello.core_count = static_cast<std::uint32_t>(options.core_count);
  hello.node_class = options.node_class;
  stream.send_message(hello);

  SyntheticKernel kernel(options.kernel);
  int my_batch = 0;
  std::uint32_t my_generation = 0;

  while (true) {
    const Message msg = stream.recv_message();
    if (std::holds_alternative<ShutdownMsg>(msg)) {
      log_info("worker " + options.node_id + " shutting down");
      return;
    }
    if (const auto* bench = std::get_if<BenchRequestMsg>(&msg)) {
      std::vector<int> batches;
      batches.reserve(bench->batch_sizes.size());
      for (std::uint32_t b : bench->batch_sizes) batches.push_back(static_cast<int>(b));

      // Scheduler jitter can dent a sweep; re-probe a couple of times before
      // giving up.
      SpeedModel model;
      for (int attempt = 0;; ++attempt) {
        try {
          model = benchmark_sweep(kernel, batches, static_cast<int>(bench->steps_per_probe),
                                  options.node_class);
          break;
        } catch (const Error& e) {
          if (e.code() != Errc::NonMonotonic || attempt >= 3) throw;
          log_warn("worker " + options.node_id + " re-probing after noisy sweep: " + e.what());
        }
      }

      // Baseline CPU occupancy of the kernel, measured at the largest batch.
      double cpu_sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        kernel.run_timed_step(batches.back());
        cpu_sum += kernel.last_cpu_utilization();
      }

      BenchResultMsg result;
      result.node_id = options.node_id;
      result.points = model.points();
      result.normal_cpu = cpu_sum / 3.0;
      stream.send_message(result);
    } else if (const auto* plan = std::get_if<PlanMsg>(&msg)) {
      bool found = false;
      for (const PlanEntry& e : plan->entries) {
        if (e.node_id == options.node_id) {
          my_batch = static_cast<int>(e.batch_size);
          found = true;
        }
      }
      if (!found) {
        fail(Errc::ProtocolError, "plan does not mention node " + options.node_id);
      }
      my_generation = plan->generation;
    } else if (const auto* begin = std::get_if<StepBeginMsg>(&msg)) {
      if (my_batch <= 0) fail(Errc::ProtocolError, "STEP_BEGIN before any PLAN");
      const double wall = kernel.run_timed_step(my_batch);
      StepReportMsg report;
      report.report.node_id = options.node_id;
      report.report.generation = static_cast<int>(my_generation);
      report.report.step_index = static_cast<std::int64_t>(begin->step);
      report.report.measured_throughput = my_batch / wall;
      report.report.cpu_utilization = kernel.last_cpu_utilization();
      report.report.wall_time = wall;
      stream.send_message(report);
    } else if (std::holds_alternative<RetuneNoticeMsg>(msg) ||
               std::holds_alternative<EpochEndMsg>(msg)) {
      // Informational; the next PLAN/STEP_BEGIN drives the state.
    } else {
      fail(Errc::ProtocolError, "unexpected message type " +
                                    std::to_string(static_cast<int>(message_type(msg))) +
                                    " at worker");
    }
  }
}

}  // namespace hypertune
