#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hypertune/coordinator.hpp"
#include "hypertune/errors.hpp"
#include "hypertune/kernel.hpp"
#include "hypertune/log.hpp"
#include "hypertune/net.hpp"
#include "hypertune/report.hpp"
#include "hypertune/scenario.hpp"
#include "hypertune/simengine.hpp"
#include "hypertune/trace.hpp"
#include "hypertune/worker.hpp"

namespace {

using namespace hypertune;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::ScenarioError:
    case Errc::OutOfRange:
    case Errc::InvalidFactor:
    case Errc::MissingModel:
    case Errc::Infeasible:
    case Errc::EmptyTrace:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

struct CommonOverrides {
  std::string controller;  // "", "on", "off"
  std::string mode;        // "", "speed", "cpu"
  bool eq3_literal = false;
  bool naive_inverse = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int epochs = 0;

  void apply(Scenario& sc) const {
    if (controller == "on") sc.controller.enabled = true;
    if (controller == "off") sc.controller.enabled = false;
    if (mode == "speed") sc.controller.policy.mode = RetunePolicy::Mode::SpeedInterpolation;
    if (mode == "cpu") sc.controller.policy.mode = RetunePolicy::Mode::CpuProportional;
    if (eq3_literal) sc.controller.policy.eq3_literal = true;
    if (naive_inverse) sc.controller.policy.naive_inverse = true;
    if (seed_set) sc.seed = seed;
    if (epochs > 0) sc.epochs = epochs;
  }
};

void add_override_flags(CLI::App* cmd, CommonOverrides& ov) {
  cmd->add_option("--controller", ov.controller, "Override controller setting (on|off)")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--mode", ov.mode, "Override retune mode (speed|cpu)")
      ->check(CLI::IsMember({"speed", "cpu"}));
  cmd->add_flag("--eq3-literal", ov.eq3_literal,
                "Use the swapped-weight inverse interpolation variant");
  cmd->add_flag("--naive-inverse", ov.naive_inverse,
                "Diagnostic: retune by inverting the nominal curve directly");
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&ov](const std::uint64_t& v) {
        ov.seed = v;
        ov.seed_set = true;
      },
      "Override the scenario seed");
  cmd->add_option("--epochs", ov.epochs, "Override the scenario epoch count");
}

void add_kernel_flags(CLI::App* cmd, SyntheticKernelConfig& kc) {
  cmd->add_option("--flops-per-sample", kc.flops_per_sample, "Kernel work per sample");
  cmd->add_option("--overhead-flops", kc.step_overhead_flops, "Fixed kernel work per step");
  cmd->add_option("--bytes-per-sample", kc.bytes_per_sample, "Kernel memory touch per sample");
  cmd->add_option("--threads", kc.threads, "Kernel worker threads");
}

int cmd_bench(const std::vector<int>& batch_sizes, int steps_per_probe,
              const std::string& node_class, const SyntheticKernelConfig& kc,
              const std::string& out_path) {
  SyntheticKernel kernel(kc);
  SpeedModel model;
  for (int attempt = 0;; ++attempt) {
    try {
      model = benchmark_sweep(kernel, batch_sizes, steps_per_probe, node_class);
      break;
    } catch (const Error& e) {
      if (e.code() != Errc::NonMonotonic || attempt >= 3) throw;
      log_warn(std::string("re-probing after noisy sweep: ") + e.what());
    }
  }
  if (out_path.empty()) {
    model.write(std::cout);
  } else {
    model.save(out_path);
    std::cout << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_plan(const std::string& scenario_path) {
  const Scenario sc = load_scenario(scenario_path);
  const BatchPlan plan = plan_initial(sc.nodes, sc.models, sc.dataset);
  std::cout << "scenario: " << sc.name << "\n";
  std::cout << "generation: " << plan.generation << "\n";
  std::cout << "predicted step time: " << plan.predicted_step_time << " s\n";
  std::cout << "steps per epoch: " << plan.steps_per_epoch << "\n";
  std::cout << "node  batch  share  offset\n";
  for (const auto& [node, bs] : plan.batch_sizes) {
    std::cout << node << "  " << bs << "  " << plan.dataset_shares.at(node) << "  "
              << plan.share_offset(node) << "\n";
  }
  return kExitOk;
}

int cmd_sim(const std::string& scenario_path, const std::string& out_path,
            const CommonOverrides& ov) {
  Scenario sc = load_scenario(scenario_path);
  ov.apply(sc);
  const SimTrace trace = run(sc);
  if (!out_path.empty()) {
    write_trace_csv(trace, out_path);
    log_info("trace written to " + out_path);
  }
  const RunReport report = emit_report(trace, sc);
  print_report(report, std::cout);
  return kExitOk;
}

int cmd_coord(const std::string& scenario_path, const std::string& listen, int workers,
              const std::string& out_path, const std::string& save_models_dir, bool self_worker,
              const SyntheticKernelConfig& kc, const std::vector<int>& bench_batches,
              int steps_per_probe, const CommonOverrides& ov) {
  Scenario sc = load_scenario(scenario_path);
  ov.apply(sc);

  const auto [host, port] = parse_endpoint(listen);
  TcpListener listener(host, port);
  CoordinatorOptions options;
  options.expected_workers = workers;
  options.dataset = sc.dataset;
  options.controller = sc.controller;
  options.epochs = sc.epochs;
  options.seed = sc.seed;
  options.declared_nodes = sc.nodes;
  if (!bench_batches.empty()) options.bench_batch_sizes = bench_batches;
  options.steps_per_probe = steps_per_probe;
  options.include_self_worker = self_worker;
  options.self_kernel = kc;
  std::cout << "listening on " << host << ":" << listener.port() << ", waiting for " << workers
            << " workers\n";

  const CoordinatorResult result = coordinator_run(listener, options);
  if (!out_path.empty() && !result.trace.rows.empty()) {
    write_trace_csv(result.trace, out_path);
    std::cout << "trace written to " << out_path << "\n";
  }
  if (!save_models_dir.empty()) {
    for (const auto& [cls, model] : result.models) {
      model.save(save_models_dir + "/" + cls + ".speedmodel");
    }
  }
  if (!result.clean) {
    std::cerr << "coordinator aborted: " << result.error << "\n";
    return kExitRuntime;
  }
  std::cout << "run complete: " << result.trace.summary.steps_completed << " steps, "
            << result.trace.summary.samples_processed << " samples\n";
  return kExitOk;
}

int cmd_work(const std::string& connect, const std::string& node_id,
             const std::string& node_class, int cores, const SyntheticKernelConfig& kc) {
  const auto [host, port] = parse_endpoint(connect);
  WorkerOptions options;
  options.host = host;
  options.port = port;
  options.node_id = node_id;
  options.node_class = node_class;
  options.core_count = cores;
  options.kernel = kc;
  worker_run(options);
  return kExitOk;
}

int cmd_replay(const std::string& scenario_path, const std::string& trace_path) {
  const Scenario sc = load_scenario(scenario_path);
  const SimTrace trace = load_trace_csv(trace_path);

  ReplayInputs inputs;
  inputs.nodes = sc.nodes;
  inputs.models = sc.models;
  inputs.dataset = sc.dataset;
  inputs.controller = sc.controller;
  for (const NodeProfile& n : sc.nodes) {
    inputs.normal_cpu[n.node_id] = static_cast<double>(n.core_count);
  }

  const std::vector<std::string> recorded = recorded_decisions(trace);
  const std::vector<std::string> replayed = replay_decisions(trace, inputs);
  const bool match = recorded == replayed;
  std::cout << "recorded decisions: " << recorded.size() << "\n";
  std::cout << "replayed decisions: " << replayed.size() << "\n";
  if (!match) {
    const std::size_t n = std::min(recorded.size(), replayed.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (recorded[i] != replayed[i]) {
        std::cout << "first divergence at #" << i << ":\n  recorded: " << recorded[i]
                  << "\n  replayed: " << replayed[i] << "\n";
        break;
      }
    }
  }
  std::cout << (match ? "MATCH" : "MISMATCH") << "\n";
  return match ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypertune - load-balanced synchronous training coordinator and simulator"};
  app.require_subcommand(1);

  // bench
  auto* bench = app.add_subcommand("bench", "Sweep the synthetic kernel and write a speed model");
  std::vector<int> bench_batches{8, 16, 32, 64, 96, 128};
  int steps_per_probe = 5;
  std::string bench_class = "local";
  std::string bench_out;
  SyntheticKernelConfig bench_kernel;
  bench->add_option("--batch-sizes", bench_batches, "Batch sizes to probe (ascending)");
  bench->add_option("--steps-per-probe", steps_per_probe, "Timed steps per batch size");
  bench->add_option("--class", bench_class, "Node class label for the model");
  bench->add_option("--out", bench_out, "Output file (default: stdout)");
  add_kernel_flags(bench, bench_kernel);

  // plan
  auto* plan = app.add_subcommand("plan", "Print the initial batch plan for a scenario");
  std::string plan_scenario;
  plan->add_option("--scenario", plan_scenario, "Scenario file")->required();

  // sim
  auto* sim = app.add_subcommand("sim", "Run a scenario in the discrete-event simulator");
  std::string sim_scenario, sim_out;
  CommonOverrides sim_ov;
  sim->add_option("--scenario", sim_scenario, "Scenario file")->required();
  sim->add_option("--out", sim_out, "Trace CSV output path");
  add_override_flags(sim, sim_ov);

  // coord
  auto* coord = app.add_subcommand("coord", "Run the live coordinator");
  std::string coord_scenario, coord_listen = "127.0.0.1:7677", coord_out, coord_models_dir;
  int coord_workers = 1;
  bool coord_self = false;
  std::vector<int> coord_bench;
  int coord_probe = 3;
  SyntheticKernelConfig coord_kernel;
  CommonOverrides coord_ov;
  coord->add_option("--scenario", coord_scenario, "Scenario file (models optional)")->required();
  coord->add_option("--listen", coord_listen, "Listen endpoint host:port");
  coord->add_option("--workers", coord_workers, "Total workers to wait for");
  coord->add_option("--out", coord_out, "Trace CSV output path");
  coord->add_option("--save-models", coord_models_dir, "Directory for benched speed models");
  coord->add_flag("--self-worker", coord_self, "Run one worker inside the coordinator process");
  coord->add_option("--bench-batches", coord_bench, "Benchmark batch sizes");
  coord->add_option("--steps-per-probe", coord_probe, "Benchmark probes per batch size");
  add_kernel_flags(coord, coord_kernel);
  add_override_flags(coord, coord_ov);

  // work
  auto* work = app.add_subcommand("work", "Run a worker process");
  std::string work_connect = "127.0.0.1:7677", work_id = "worker-1", work_class = "worker";
  int work_cores = 1;
  SyntheticKernelConfig work_kernel;
  work->add_option("--connect", work_connect, "Coordinator endpoint host:port");
  work->add_option("--node-id", work_id, "Node identifier");
  work->add_option("--class", work_class, "Node class");
  work->add_option("--cores", work_cores, "Core count to report");
  add_kernel_flags(work, work_kernel);

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a trace's decisions offline and compare");
  std::string replay_scenario, replay_trace;
  replay->add_option("--scenario", replay_scenario, "Scenario file")->required();
  replay->add_option("--trace", replay_trace, "Trace CSV to replay")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help path
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (bench->parsed()) {
      return cmd_bench(bench_batches, steps_per_probe, bench_class, bench_kernel, bench_out);
    }
    if (plan->parsed()) return cmd_plan(plan_scenario);
    if (sim->parsed()) return cmd_sim(sim_scenario, sim_out, sim_ov);
    if (coord->parsed()) {
      return cmd_coord(coord_scenario, coord_listen, coord_workers, coord_out, coord_models_dir,
                       coord_self, coord_kernel, coord_bench, coord_probe, coord_ov);
    }
    if (work->parsed()) {
      return cmd_work(work_connect, work_id, work_class, work_cores, work_kernel);
    }
    if (replay->parsed()) return cmd_replay(replay_scenario, replay_trace);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}
