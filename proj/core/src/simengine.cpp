#include "hypertune/simengine.hpp"

#include <algorithm>
#include <cmath>

#include "hypertune/errors.hpp"
#include "hypertune/log.hpp"
#include "hypertune/rng.hpp"

namespace hypertune {
namespace {

double noise_multiplier(const Scenario& sc, int epoch, std::int64_t step,
                        std::size_t node_index) {
  if (sc.timing_noise == 0.0) return 1.0;
  std::uint64_t key = hash_combine(sc.seed, hash_string("timing-noise"));
  key = hash_combine(key, static_cast<std::uint64_t>(epoch));
  key = hash_combine(key, static_cast<std::uint64_t>(step));
  key = hash_combine(key, static_cast<std::uint64_t>(node_index));
  SplitMix64 rng(key);
  return 1.0 - sc.timing_noise + 2.0 * sc.timing_noise * rng.next_double();
}

}  // namespace

std::map<std::string, std::vector<std::int64_t>> shuffle_assignment(const DatasetSpec& dataset,
                                                                    const BatchPlan& plan,
                                                                    int epoch,
                                                                    std::uint64_t seed) {
  std::uint64_t base = hash_combine(seed, hash_string("shuffle"));
  base = hash_combine(base, static_cast<std::uint64_t>(epoch));
  base = hash_combine(base, static_cast<std::uint64_t>(plan.generation));

  // Public samples are re-dealt across nodes every epoch.
  const DatasetSpec::IdRange pub = dataset.public_range();
  std::vector<std::int64_t> public_pool;
  public_pool.reserve(static_cast<std::size_t>(pub.size()));
  for (std::int64_t id = pub.begin; id < pub.end; ++id) public_pool.push_back(id);
  SplitMix64 pool_rng(hash_combine(base, hash_string("public-pool")));
  deterministic_shuffle(public_pool, pool_rng);

  std::map<std::string, std::vector<std::int64_t>> assignment;
  std::size_t pool_pos = 0;
  for (const auto& [node, share] : plan.dataset_shares) {
    const DatasetSpec::IdRange priv = dataset.private_range(node);
    std::vector<std::int64_t>& list = assignment[node];
    list.reserve(static_cast<std::size_t>(share));
    for (std::int64_t id = priv.begin; id < priv.end; ++id) list.push_back(id);
    std::int64_t public_need = share - priv.size();
    if (public_need < 0) {
      fail(Errc::Infeasible, "share of node " + node + " is below its private holdings");
    }
    for (; public_need > 0; --public_need) {
      if (pool_pos >= public_pool.size()) {
        fail(Errc::Infeasible, "dataset shares exceed the public sample pool");
      }
      list.push_back(public_pool[pool_pos++]);
    }
    SplitMix64 node_rng(hash_combine(base, hash_string(node.c_str())));
    deterministic_shuffle(list, node_rng);
  }
  return assignment;
}

std::map<std::uint32_t, std::int64_t> coverage_report(const SimTrace& trace) {
  std::map<std::uint32_t, std::int64_t> histogram;
  for (std::uint32_t c : trace.summary.coverage_counts) histogram[c] += 1;
  return histogram;
}

SimTrace run(const Scenario& sc) {
  sc.validate();

  BatchPlan plan = plan_initial(sc.nodes, sc.models, sc.dataset);
  const std::map<std::string, int> initial_batches = plan.batch_sizes;

  Monitor monitor(sc.controller.monitor);
  std::map<std::string, double> references;
  for (const NodeProfile& n : sc.nodes) {
    monitor.set_normal_cpu(n.node_id, static_cast<double>(n.core_count));
    references[n.node_id] = sc.models.at(n.node_class).speed_at(plan.batch_sizes.at(n.node_id));
  }
  monitor.adopt_plan(plan, references);

  SimTrace trace;
  trace.summary.coverage_counts.assign(static_cast<std::size_t>(sc.dataset.total_samples), 0);

  double now = 0.0;
  std::size_t next_event = 0;
  std::map<std::string, SpeedModel> active;
  for (const NodeProfile& n : sc.nodes) active.emplace(n.node_id, sc.models.at(n.node_class));

  auto emit_plan_rows = [&](int epoch) {
    for (const NodeProfile& n : sc.nodes) {
      TraceRow row;
      row.time_s = now;
      row.epoch = epoch;
      row.step = -1;
      row.generation = plan.generation;
      row.node_id = n.node_id;
      row.decision = plan_decision_string(plan, n.node_id);
      trace.rows.push_back(std::move(row));
    }
  };

  auto adopt = [&](const BatchPlan& next_plan, const std::map<std::string, double>& refs) {
    plan = next_plan;
    monitor.adopt_plan(plan, refs);
    references = refs;
  };

  emit_plan_rows(0);

  for (int epoch = 0; epoch < sc.epochs; ++epoch) {
    const auto assignment = shuffle_assignment(sc.dataset, plan, epoch, sc.seed);
    const std::map<std::string, int> epoch_batches = plan.batch_sizes;
    const std::int64_t steps = plan.steps_per_epoch;
    std::int64_t completed = 0;
    bool terminated = false;

    const ForcedTermination* forced = nullptr;
    for (const ForcedTermination& t : sc.forced_terminations) {
      if (t.epoch == epoch) forced = &t;
    }

    for (std::int64_t step = 0; step < steps; ++step) {
      if (forced != nullptr && forced->step == step) {
        TraceRow row;
        row.time_s = now;
        row.epoch = epoch;
        row.step = step;
        row.generation = plan.generation;
        row.node_id = sc.nodes.front().node_id;
        row.decision = "TERMINATE forced";
        trace.rows.push_back(std::move(row));
        adopt(replan(plan, plan.batch_sizes, sc.dataset), references);
        emit_plan_rows(epoch + 1);
        completed = step;
        terminated = true;
        break;
      }

      // Workload events take effect at the next step boundary.
      std::map<std::string, std::string> fired;
      while (next_event < sc.events.size() && sc.events[next_event].at_time <= now) {
        const WorkloadEvent& e = sc.events[next_event];
        active.insert_or_assign(e.node_id, sc.active_model(e.node_id, e.cores_taken));
        std::string& tag = fired[e.node_id];
        if (!tag.empty()) tag += ";";
        tag += "workload cores=" + std::to_string(e.cores_taken);
        ++next_event;
      }

      double wall = 0.0;
      std::map<std::string, double> compute_time;
      std::vector<StepReport> reports;
      reports.reserve(sc.nodes.size());
      for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
        const NodeProfile& n = sc.nodes[i];
        const int batch = plan.batch_sizes.at(n.node_id);
        const double speed = active.at(n.node_id).speed_at(batch);
        const double t = batch / speed * noise_multiplier(sc, epoch, step, i);
        compute_time[n.node_id] = t;
        wall = std::max(wall, t);

        const double nominal_speed = sc.models.at(n.node_class).speed_at(batch);
        StepReport report;
        report.node_id = n.node_id;
        report.generation = plan.generation;
        report.step_index = step;
        report.measured_throughput = batch / t;
        report.cpu_utilization = speed / nominal_speed * n.core_count;
        report.wall_time = t;
        reports.push_back(std::move(report));
      }
      now += wall;
      const double cluster = static_cast<double>(plan.total_batch()) / wall;

      MonitorDecision decision;
      if (sc.controller.enabled) {
        decision = monitor.observe(reports, plan);
      }

      const std::size_t first_row = trace.rows.size();
      for (const NodeProfile& n : sc.nodes) {
        TraceRow row;
        row.time_s = now;
        row.epoch = epoch;
        row.step = step;
        row.generation = plan.generation;
        row.node_id = n.node_id;
        row.throughput = plan.batch_sizes.at(n.node_id) / compute_time.at(n.node_id);
        row.cluster_throughput = cluster;
        auto fired_it = fired.find(n.node_id);
        if (fired_it != fired.end()) row.event = fired_it->second;
        for (const FlaggedNode& f : decision.flagged) {
          if (f.node_id == n.node_id) row.decision = "FLAG";
        }
        trace.rows.push_back(std::move(row));
      }
      ++completed;
      trace.summary.steps_completed += 1;
      trace.summary.samples_processed += plan.total_batch();

      if (decision.terminate()) {
        // Mark the tripping node, retune every flagged one, restart the
        // epoch under the replacement plan.
        for (std::size_t i = first_row; i < trace.rows.size(); ++i) {
          if (trace.rows[i].node_id == decision.flagged.front().node_id) {
            trace.rows[i].decision = "TERMINATE";
          }
        }
        RetuneResult result = retune(plan, decision, sc.nodes, sc.models, monitor,
                                     sc.controller.policy, sc.dataset, initial_batches);
        adopt(result.plan, result.expected_speeds);
        emit_plan_rows(epoch + 1);
        terminated = true;
        break;
      }
    }
    if (!terminated) completed = steps;

    // Coverage: the first completed*BS samples of each node's shuffled list
    // went through training this epoch.
    for (const auto& [node, list] : assignment) {
      const std::int64_t consumed = std::min<std::int64_t>(
          completed * epoch_batches.at(node), static_cast<std::int64_t>(list.size()));
      for (std::int64_t k = 0; k < consumed; ++k) {
        trace.summary.coverage_counts[static_cast<std::size_t>(list[k])] += 1;
      }
    }

    if (terminated) trace.summary.epochs_early_terminated += 1;
    trace.summary.epochs_run += 1;

    // Upscale pass (CPU mode): give back batch size between epochs once the
    // external load is gone.
    if (!terminated && sc.controller.enabled &&
        sc.controller.policy.mode == RetunePolicy::Mode::CpuProportional) {
      auto proposal = upscale_check(plan, monitor, sc.controller.policy, initial_batches);
      if (proposal.has_value()) {
        std::map<std::string, int> merged = plan.batch_sizes;
        for (const auto& [node, bs] : *proposal) merged[node] = bs;
        BatchPlan next = replan(plan, merged, sc.dataset);
        std::map<std::string, double> refs = references;
        for (const auto& [node, bs] : *proposal) {
          refs[node] = sc.models.at(sc.node(node).node_class).speed_at(bs);
        }
        adopt(next, refs);
        emit_plan_rows(epoch + 1);
      }
    }
  }

  trace.summary.discarded_reports = monitor.discarded_reports();
  if (sc.joules_per_step > 0.0) {
    trace.summary.total_energy_j = sc.joules_per_step * trace.summary.steps_completed;
  }
  return trace;
}

}  // namespace hypertune
