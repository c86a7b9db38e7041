#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hypertune/errors.hpp"
#include "hypertune/report.hpp"
#include "hypertune/scenario.hpp"
#include "hypertune/simengine.hpp"
#include "hypertune/trace.hpp"
#include "test_util.hpp"

using namespace hypertune;

namespace {

std::string data_path(const std::string& name) {
  return std::string(HYPERTUNE_TEST_DATA_DIR) + "/" + name;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Two-node scenario with one interrupt; small enough for a golden file.
Scenario golden_scenario() {
  Scenario sc;
  sc.name = "golden";
  sc.seed = 11;
  sc.epochs = 2;
  sc.timing_noise = 0.0;
  sc.nodes = {testutil::node("a", "big"), testutil::node("b", "small", 4)};
  sc.models.emplace("big", testutil::model({{40, 10.0}, {80, 16.0}, {120, 16.1}}, "big"));
  sc.models.emplace("small", testutil::model({{10, 2.0}, {30, 4.0}, {60, 4.05}}, "small"));
  sc.dataset = testutil::public_dataset(1800);
  sc.degradation["big"][4] = Degradation{true, 0.5, {}};
  sc.events.push_back(WorkloadEvent{20.0, "a", 4});
  sc.controller.enabled = true;
  return sc;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HYPERTUNE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("emit_report ratios are recomputable from trace rows") {
  const Scenario sc = load_scenario(testutil::fixture_path("three_node.cfg"));
  const SimTrace trace = run(sc);
  const RunReport report = emit_report(trace, sc);

  REQUIRE(report.phases.size() == 3);
  // Recompute phase means from raw rows: boundaries at the event step and the
  // first step of the new generation.
  struct Step {
    double end = 0.0;
    double cluster = 0.0;
    int generation = 0;
    bool has_event = false;
  };
  std::vector<Step> steps;
  std::int64_t step_key = -1;
  int epoch_key = -1;
  for (const TraceRow& r : trace.rows) {
    if (r.step < 0 || r.cluster_throughput <= 0.0) continue;
    if (r.epoch != epoch_key || r.step != step_key) {
      steps.push_back(Step{r.time_s, r.cluster_throughput, r.generation, false});
      epoch_key = r.epoch;
      step_key = r.step;
    }
    if (!r.event.empty()) steps.back().has_event = true;
  }
  struct Acc {
    double samples = 0.0, seconds = 0.0;
  };
  std::vector<Acc> acc(3);
  int phase = 0;
  double prev = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].has_event) phase = 1;
    if (i > 0 && steps[i].generation != steps[i - 1].generation) phase = 2;
    const double wall = steps[i].end - prev;
    acc[phase].samples += steps[i].cluster * wall;
    acc[phase].seconds += wall;
    prev = steps[i].end;
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(report.phases[i].mean_throughput ==
          doctest::Approx(acc[i].samples / acc[i].seconds).epsilon(1e-9));
  }
  CHECK(report.tuned_over_untuned ==
        doctest::Approx(report.phases[2].mean_throughput / report.phases[1].mean_throughput)
            .epsilon(1e-9));

  REQUIRE(report.retunes.size() == 1);
  CHECK(report.retunes[0].node_id == "node-b");
  CHECK(report.retunes[0].old_batch == 180);
  CHECK(report.retunes[0].new_batch == 101);
}

TEST_CASE("single-phase traces produce a report without ratios") {
  Scenario sc = load_scenario(testutil::fixture_path("three_node.cfg"));
  sc.events.clear();
  sc.epochs = 1;
  const SimTrace trace = run(sc);
  const RunReport report = emit_report(trace, sc);
  REQUIRE(report.phases.size() == 1);
  CHECK(report.phases[0].mean_throughput == doctest::Approx(93.45).epsilon(1e-6));
  CHECK(report.tuned_over_untuned == 0.0);
  CHECK(report.retunes.empty());
  // three equal nodes: distributed over one of them is 3x
  CHECK(report.distributed_over_single == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("emit_report rejects empty traces") {
  const Scenario sc = load_scenario(testutil::fixture_path("three_node.cfg"));
  SimTrace empty;
  CHECK_THROWS_AS(emit_report(empty, sc), Error);
}

TEST_CASE("trace csv matches the golden file byte for byte") {
  const Scenario sc = golden_scenario();
  const SimTrace trace = run(sc);
  std::stringstream buf;
  write_trace_csv(trace, buf);
  CHECK(buf.str() == read_file(data_path("golden_trace.csv")));
}

TEST_CASE("cli exit codes distinguish validation from runtime failures") {
  CHECK(run_cli("sim --scenario " + testutil::fixture_path("three_node.cfg") +
                " --epochs 2") == 0);
  CHECK(run_cli("sim --scenario /nonexistent/missing.cfg") == 2);
  CHECK(run_cli("plan --scenario " + testutil::fixture_path("csd36_mobilenet.cfg")) == 0);
  CHECK(run_cli("definitely-not-a-subcommand") == 2);
  CHECK(run_cli("sim") == 2);  // missing required --scenario
  CHECK(run_cli("work --connect 127.0.0.1:1 --node-id w --class c --cores 1") == 3);
}

TEST_CASE("cli sim and replay agree end to end through files") {
  const std::string trace_path = "/tmp/hypertune_cli_trace.csv";
  const std::string fixture = testutil::fixture_path("three_node.cfg");
  CHECK(run_cli("sim --scenario " + fixture + " --out " + trace_path) == 0);
  CHECK(run_cli("replay --scenario " + fixture + " --trace " + trace_path) == 0);
  std::remove(trace_path.c_str());
}

TEST_CASE("cli bench writes a loadable speed model file") {
  const std::string path = "/tmp/hypertune_cli_bench.speedmodel";
  const int rc = run_cli("bench --batch-sizes 8 16 32 --steps-per-probe 3 --class k "
                         "--flops-per-sample 30000 --out " + path);
  CHECK(rc == 0);
  const SpeedModel m = SpeedModel::load(path);
  CHECK(m.node_class() == "k");
  CHECK(m.points().size() == 3);
  CHECK(m.min_batch() == 8);
  CHECK(m.max_batch() == 32);
  std::remove(path.c_str());
}

TEST_CASE("cli coord drives its own in-process worker over loopback") {
  std::ofstream cfg("/tmp/hypertune_live.cfg");
  cfg << "name live-smoke\nepochs 1\n[nodes]\ncoordinator-self x 1 host\n"
         "[dataset]\ntotal 400\n";
  cfg.close();
  const int rc = run_cli(
      "coord --scenario /tmp/hypertune_live.cfg --listen 127.0.0.1:0 --workers 1 "
      "--self-worker --bench-batches 8 16 32 --steps-per-probe 2 "
      "--flops-per-sample 30000 --out /tmp/hypertune_live_trace.csv");
  CHECK(rc == 0);
  const SimTrace trace = load_trace_csv("/tmp/hypertune_live_trace.csv");
  CHECK_FALSE(trace.rows.empty());
  std::remove("/tmp/hypertune_live.cfg");
  std::remove("/tmp/hypertune_live_trace.csv");
}
