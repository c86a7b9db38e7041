#include "hypertune/coordinator.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <thread>

#include "hypertune/errors.hpp"
#include "hypertune/log.hpp"
#include "hypertune/monitor.hpp"
#include "hypertune/retuner.hpp"
#include "hypertune/simengine.hpp"
#include "hypertune/worker.hpp"

namespace hypertune {
namespace {

using Clock = std::chrono::steady_clock;

struct Inbound {
  std::size_t worker = 0;
  std::optional<Message> msg;
  std::string error;
};

class InboundQueue {
 public:
  void push(Inbound in) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      queue_.push_back(std::move(in));
    }
    cv_.notify_one();
  }

  // Empty optional on deadline expiry.
  std::optional<Inbound> pop_before(Clock::time_point deadline) {
    std::unique_lock<std::mutex> lock(mutex_);
    if (!cv_.wait_until(lock, deadline, [&] { return !queue_.empty(); })) {
      return std::nullopt;
    }
    Inbound in = std::move(queue_.front());
    queue_.pop_front();
    return in;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Inbound> queue_;
};

struct WorkerSlot {
  TcpStream stream;
  std::thread reader;
  HelloMsg hello;
  bool lost = false;
};

PlanMsg plan_message(const BatchPlan& plan) {
  PlanMsg msg;
  msg.generation = static_cast<std::uint32_t>(plan.generation);
  msg.steps_per_epoch = static_cast<std::uint64_t>(plan.steps_per_epoch);
  for (const auto& [node, bs] : plan.batch_sizes) {
    PlanEntry e;
    e.node_id = node;
    e.batch_size = static_cast<std::uint32_t>(bs);
    e.share_offset = static_cast<std::uint64_t>(plan.share_offset(node));
    e.share_length = static_cast<std::uint64_t>(plan.dataset_shares.at(node));
    msg.entries.push_back(std::move(e));
  }
  return msg;
}

}  // namespace

CoordinatorResult coordinator_run(TcpListener& listener, const CoordinatorOptions& options) {
  CoordinatorResult result;
  if (options.expected_workers < 1) {
    result.error = "expected_workers must be >= 1";
    return result;
  }

  std::vector<WorkerSlot> slots(static_cast<std::size_t>(options.expected_workers));
  InboundQueue inbox;
  std::thread self_worker;
  const auto t0 = Clock::now();
  auto now_s = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  auto shutdown_all = [&](bool send_shutdown) {
    for (WorkerSlot& slot : slots) {
      if (!slot.stream.valid()) continue;
      if (send_shutdown && !slot.lost) {
        try {
          slot.stream.send_message(ShutdownMsg{});
        } catch (const Error&) {
        }
      }
      slot.stream.shutdown();
    }
    for (WorkerSlot& slot : slots) {
      if (slot.reader.joinable()) slot.reader.join();
      slot.stream.close();
    }
    if (self_worker.joinable()) self_worker.join();
  };

  try {
    if (options.include_self_worker) {
      WorkerOptions wo;
      wo.host = "127.0.0.1";
      wo.port = listener.port();
      wo.node_id = "coordinator-self";
      wo.node_class = "coordinator-self";
      wo.core_count = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
      wo.kernel = options.self_kernel;
      self_worker = std::thread([wo] {
        try {
          worker_run(wo);
        } catch (const Error& e) {
          log_warn(std::string("self worker: ") + e.what());
        }
      });
    }

    // Join phase: accept sockets, then collect one HELLO per worker.
    for (std::size_t i = 0; i < slots.size(); ++i) {
      slots[i].stream = listener.accept();
      TcpStream* stream = &slots[i].stream;
      const std::size_t idx = i;
      slots[i].reader = std::thread([stream, idx, &inbox] {
        while (true) {
          Inbound in;
          in.worker = idx;
          try {
            in.msg = stream->recv_message();
          } catch (const Error& e) {
            in.error = e.what();
            inbox.push(std::move(in));
            return;
          }
          inbox.push(std::move(in));
        }
      });
    }
    const auto join_deadline = Clock::now() + std::chrono::seconds(120);
    int hellos = 0;
    while (hellos < options.expected_workers) {
      auto in = inbox.pop_before(join_deadline);
      if (!in.has_value()) fail(Errc::Timeout, "workers did not join in time");
      if (!in->error.empty()) fail(Errc::WorkerLost, "worker lost during join: " + in->error);
      const auto* hello = std::get_if<HelloMsg>(&*in->msg);
      if (hello == nullptr) fail(Errc::ProtocolError, "expected HELLO first");
      if (hello->version != kProtocolVersion) {
        fail(Errc::ProtocolError, "unsupported protocol version " + std::to_string(hello->version));
      }
      slots[in->worker].hello = *hello;
      ++hellos;
    }

    // Node profiles: HELLO identity, plus declared privacy attributes.
    for (const WorkerSlot& slot : slots) {
      NodeProfile profile;
      profile.node_id = slot.hello.node_id;
      profile.node_class = slot.hello.node_class;
      profile.core_count = static_cast<int>(slot.hello.core_count);
      for (const NodeProfile& existing : result.nodes) {
        if (existing.node_id == profile.node_id) {
          fail(Errc::ProtocolError, "two workers joined as node " + profile.node_id);
        }
      }
      for (const NodeProfile& declared : options.declared_nodes) {
        if (declared.node_id == profile.node_id) {
          profile.is_storage_node = declared.is_storage_node;
          profile.owned_private_samples = declared.owned_private_samples;
        }
      }
      result.nodes.push_back(std::move(profile));
    }

    // Benchmark phase. Workers are probed one at a time so co-located
    // workers do not contend with each other during their sweeps.
    BenchRequestMsg bench;
    for (int b : options.bench_batch_sizes) bench.batch_sizes.push_back(static_cast<std::uint32_t>(b));
    bench.steps_per_probe = static_cast<std::uint32_t>(options.steps_per_probe);

    std::map<std::string, std::vector<BenchResultMsg>> bench_by_class;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      slots[i].stream.send_message(bench);
      const auto bench_deadline = Clock::now() + std::chrono::seconds(300);
      while (true) {
        auto in = inbox.pop_before(bench_deadline);
        if (!in.has_value()) fail(Errc::Timeout, "benchmark results did not arrive in time");
        if (!in->error.empty()) fail(Errc::WorkerLost, "worker lost during bench: " + in->error);
        const auto* res = std::get_if<BenchResultMsg>(&*in->msg);
        if (res == nullptr || in->worker != i || res->node_id != slots[i].hello.node_id ||
            res->points.size() != bench.batch_sizes.size()) {
          fail(Errc::ProtocolError, "expected a full BENCH_RESULT from worker " +
                                        slots[i].hello.node_id);
        }
        bench_by_class[slots[i].hello.node_class].push_back(*res);
        result.normal_cpu[res->node_id] = res->normal_cpu;
        break;
      }
    }
    for (const auto& [cls, results] : bench_by_class) {
      // Same-class workers probed the same grid; average them pointwise.
      std::vector<SpeedPoint> points = results.front().points;
      for (std::size_t i = 1; i < results.size(); ++i) {
        for (std::size_t k = 0; k < points.size(); ++k) {
          points[k].throughput += results[i].points[k].throughput;
        }
      }
      for (SpeedPoint& p : points) p.throughput /= static_cast<double>(results.size());
      result.models.emplace(cls, SpeedModel(cls, std::move(points)));
    }

    DatasetSpec dataset = options.dataset;
    dataset.validate();

    BatchPlan plan = plan_initial(result.nodes, result.models, dataset);
    const std::map<std::string, int> initial_batches = plan.batch_sizes;

    Monitor monitor(options.controller.monitor);
    std::map<std::string, double> references;
    for (const NodeProfile& n : result.nodes) {
      monitor.set_normal_cpu(n.node_id, result.normal_cpu.at(n.node_id));
      references[n.node_id] =
          result.models.at(n.node_class).speed_at(plan.batch_sizes.at(n.node_id));
    }
    monitor.adopt_plan(plan, references);

    result.trace.summary.coverage_counts.assign(
        static_cast<std::size_t>(dataset.total_samples), 0);

    auto emit_plan_rows = [&](int epoch) {
      for (const NodeProfile& n : result.nodes) {
        TraceRow row;
        row.time_s = now_s();
        row.epoch = epoch;
        row.step = -1;
        row.generation = plan.generation;
        row.node_id = n.node_id;
        row.decision = plan_decision_string(plan, n.node_id);
        result.trace.rows.push_back(std::move(row));
      }
    };

    auto broadcast = [&](const Message& msg) {
      for (WorkerSlot& slot : slots) slot.stream.send_message(msg);
    };

    broadcast(Message(plan_message(plan)));
    emit_plan_rows(0);

    std::int64_t coordinator_discards = 0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
      const auto assignment = shuffle_assignment(dataset, plan, epoch, options.seed);
      const std::map<std::string, int> epoch_batches = plan.batch_sizes;
      const std::int64_t steps = plan.steps_per_epoch;
      std::int64_t completed = 0;
      bool terminated = false;

      for (std::int64_t step = 0; step < steps; ++step) {
        StepBeginMsg begin;
        begin.generation = static_cast<std::uint32_t>(plan.generation);
        begin.step = static_cast<std::uint64_t>(step);
        broadcast(begin);

        const double timeout_s = std::max(options.min_step_timeout_s,
                                          options.step_timeout_factor * plan.predicted_step_time);
        const auto deadline =
            Clock::now() + std::chrono::milliseconds(static_cast<long>(timeout_s * 1000.0));
        std::map<std::string, StepReport> fresh;
        while (fresh.size() < result.nodes.size()) {
          auto in = inbox.pop_before(deadline);
          if (!in.has_value()) {
            fail(Errc::Timeout, "step " + std::to_string(step) + " reports missed the deadline");
          }
          if (!in->error.empty()) {
            slots[in->worker].lost = true;
            fail(Errc::WorkerLost,
                 "worker " + slots[in->worker].hello.node_id + ": " + in->error);
          }
          const auto* report = std::get_if<StepReportMsg>(&*in->msg);
          if (report == nullptr) fail(Errc::ProtocolError, "expected STEP_REPORT");
          if (report->report.node_id != slots[in->worker].hello.node_id) {
            fail(Errc::ProtocolError, "report from " + slots[in->worker].hello.node_id +
                                          " claims to be from " + report->report.node_id);
          }
          if (report->report.generation < plan.generation) {
            ++coordinator_discards;  // stale generation, fence it off
            continue;
          }
          fresh[report->report.node_id] = report->report;
        }

        std::vector<StepReport> reports;
        reports.reserve(fresh.size());
        double wall = 0.0;
        for (const auto& [node, r] : fresh) {
          reports.push_back(r);
          wall = std::max(wall, r.wall_time);
        }
        const double cluster = static_cast<double>(plan.total_batch()) / wall;

        MonitorDecision decision;
        if (options.controller.enabled) {
          decision = monitor.observe(reports, plan);
        }

        const std::size_t first_row = result.trace.rows.size();
        for (const NodeProfile& n : result.nodes) {
          const StepReport& r = fresh.at(n.node_id);
          TraceRow row;
          row.time_s = now_s();
          row.epoch = epoch;
          row.step = step;
          row.generation = plan.generation;
          row.node_id = n.node_id;
          row.throughput = r.measured_throughput;
          row.cluster_throughput = cluster;
          for (const FlaggedNode& f : decision.flagged) {
            if (f.node_id == n.node_id) row.decision = "FLAG";
          }
          result.trace.rows.push_back(std::move(row));
        }
        ++completed;
        result.trace.summary.steps_completed += 1;
        result.trace.summary.samples_processed += plan.total_batch();

        if (decision.terminate()) {
          for (std::size_t i = first_row; i < result.trace.rows.size(); ++i) {
            if (result.trace.rows[i].node_id == decision.flagged.front().node_id) {
              result.trace.rows[i].decision = "TERMINATE";
            }
          }
          broadcast(RetuneNoticeMsg{static_cast<std::uint32_t>(plan.generation)});
          RetuneResult retuned = retune(plan, decision, result.nodes, result.models, monitor,
                                        options.controller.policy, dataset, initial_batches);
          plan = retuned.plan;
          monitor.adopt_plan(plan, retuned.expected_speeds);
          references = retuned.expected_speeds;
          broadcast(Message(plan_message(plan)));
          emit_plan_rows(epoch + 1);
          terminated = true;
          break;
        }
      }
      if (!terminated) completed = steps;

      for (const auto& [node, list] : assignment) {
        const std::int64_t consumed = std::min<std::int64_t>(
            completed * epoch_batches.at(node), static_cast<std::int64_t>(list.size()));
        for (std::int64_t k = 0; k < consumed; ++k) {
          result.trace.summary.coverage_counts[static_cast<std::size_t>(list[k])] += 1;
        }
      }
      if (terminated) result.trace.summary.epochs_early_terminated += 1;
      result.trace.summary.epochs_run += 1;
      broadcast(EpochEndMsg{static_cast<std::uint32_t>(epoch)});

      if (!terminated && options.controller.enabled &&
          options.controller.policy.mode == RetunePolicy::Mode::CpuProportional) {
        auto proposal = upscale_check(plan, monitor, options.controller.policy, initial_batches);
        if (proposal.has_value()) {
          std::map<std::string, int> merged = plan.batch_sizes;
          for (const auto& [node, bs] : *proposal) merged[node] = bs;
          plan = replan(plan, merged, dataset);
          for (const auto& [node, bs] : *proposal) {
            for (const NodeProfile& n : result.nodes) {
              if (n.node_id == node) references[node] = result.models.at(n.node_class).speed_at(bs);
            }
          }
          monitor.adopt_plan(plan, references);
          broadcast(Message(plan_message(plan)));
          emit_plan_rows(epoch + 1);
        }
      }
    }

    result.trace.summary.discarded_reports = monitor.discarded_reports() + coordinator_discards;
    shutdown_all(true);
    result.clean = true;
  } catch (const Error& e) {
    result.error = e.what();
    log_error(std::string("coordinator aborting: ") + e.what());
    shutdown_all(false);
  } catch (const std::exception& e) {
    result.error = e.what();
    log_error(std::string("coordinator aborting: ") + e.what());
    shutdown_all(false);
  }
  return result;
}

std::vector<std::string> recorded_decisions(const SimTrace& trace) {
  std::vector<std::string> decisions;
  for (const TraceRow& r : trace.rows) {
    if (r.decision.empty()) continue;
    decisions.push_back(std::to_string(r.epoch) + ":" + std::to_string(r.step) + ":" + r.node_id +
                        ":" + r.decision);
  }
  return decisions;
}

std::vector<std::string> replay_decisions(const SimTrace& trace, const ReplayInputs& inputs) {
  std::vector<std::string> decisions;
  Monitor monitor(inputs.controller.monitor);
  for (const auto& [node, cpu] : inputs.normal_cpu) monitor.set_normal_cpu(node, cpu);

  // Reconstruct generation 0 from the leading PLAN rows.
  BatchPlan plan;
  bool have_plan = false;
  std::map<std::string, int> initial_batches;

  auto note_plan_rows = [&](const BatchPlan& p, int epoch) {
    for (const NodeProfile& n : inputs.nodes) {
      decisions.push_back(std::to_string(epoch) + ":-1:" + n.node_id + ":" +
                          plan_decision_string(p, n.node_id));
    }
  };

  std::size_t i = 0;
  const auto& rows = trace.rows;
  // Leading PLAN rows.
  for (; i < rows.size() && rows[i].step == -1; ++i) {
    int gen = 0, bs = 0;
    std::int64_t share = 0, steps = 0;
    if (!parse_plan_decision(rows[i].decision, gen, bs, share, steps)) {
      fail(Errc::ScenarioError, "trace does not start with PLAN rows");
    }
    plan.generation = gen;
    plan.batch_sizes[rows[i].node_id] = bs;
    plan.dataset_shares[rows[i].node_id] = share;
    plan.steps_per_epoch = steps;
    have_plan = true;
  }
  if (!have_plan) fail(Errc::EmptyTrace, "no plan rows in trace");
  initial_batches = plan.batch_sizes;

  std::map<std::string, double> references;
  double predicted = 0.0;
  for (const NodeProfile& n : inputs.nodes) {
    const SpeedModel& model = inputs.models.at(n.node_class);
    const int bs = plan.batch_sizes.at(n.node_id);
    references[n.node_id] = model.speed_at(bs);
    predicted = std::max(predicted, bs / model.speed_at(bs));
  }
  plan.predicted_step_time = predicted;
  monitor.adopt_plan(plan, references);
  note_plan_rows(plan, 0);

  // Walk step groups.
  while (i < rows.size()) {
    if (rows[i].step < 0) {
      // Plan rows produced by the recorded retune; the replayed retune below
      // already emitted its own copies, so just skip them.
      ++i;
      continue;
    }
    const int epoch = rows[i].epoch;
    const std::int64_t step = rows[i].step;
    std::vector<StepReport> reports;
    for (; i < rows.size() && rows[i].step == step && rows[i].epoch == epoch; ++i) {
      StepReport r;
      r.node_id = rows[i].node_id;
      r.generation = rows[i].generation;
      r.step_index = step;
      r.measured_throughput = rows[i].throughput;
      r.cpu_utilization = 0.0;  // not recorded in the CSV schema
      r.wall_time = 0.0;
      reports.push_back(std::move(r));
    }
    const MonitorDecision decision = monitor.observe(reports, plan);
    // Emit flags in node order to match how trace rows were written.
    for (const NodeProfile& n : inputs.nodes) {
      const bool is_flagged =
          std::any_of(decision.flagged.begin(), decision.flagged.end(),
                      [&](const FlaggedNode& f) { return f.node_id == n.node_id; });
      if (!is_flagged) continue;
      const bool primary =
          decision.terminate() && decision.flagged.front().node_id == n.node_id;
      decisions.push_back(std::to_string(epoch) + ":" + std::to_string(step) + ":" + n.node_id +
                          ":" + (primary ? "TERMINATE" : "FLAG"));
    }
    if (decision.terminate()) {
      RetuneResult retuned = retune(plan, decision, inputs.nodes, inputs.models, monitor,
                                    inputs.controller.policy, inputs.dataset, initial_batches);
      plan = retuned.plan;
      monitor.adopt_plan(plan, retuned.expected_speeds);
      note_plan_rows(plan, epoch + 1);
    }
  }
  return decisions;
}

}  // namespace hypertune
