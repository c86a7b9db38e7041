#include <benchmark/benchmark.h>

#include "hypertune/planner.hpp"
#include "hypertune/scenario.hpp"
#include "hypertune/simengine.hpp"
#include "hypertune/speed_model.hpp"
#include "hypertune/wire.hpp"

namespace {

using namespace hypertune;

std::string fixture(const char* name) {
  return std::string(HYPERTUNE_FIXTURES_DIR) + "/" + name;
}

SpeedModel wide_model() {
  std::vector<SpeedPoint> points;
  for (int b = 16; b <= 4096; b += 16) {
    points.push_back({b, 200.0 * b / (b + 300.0)});
  }
  return SpeedModel("wide", std::move(points));
}

void BM_SpeedAt(benchmark::State& state) {
  const SpeedModel m = wide_model();
  double batch = 17.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.speed_at(batch));
    batch += 7.0;
    if (batch > 4000.0) batch = 17.0;
  }
}
BENCHMARK(BM_SpeedAt);

void BM_BatchForSpeed(benchmark::State& state) {
  const SpeedModel m = wide_model();
  double target = m.min_throughput();
  const double hi = m.max_throughput();
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.batch_for_speed(target));
    target += 0.37;
    if (target > hi) target = m.min_throughput();
  }
}
BENCHMARK(BM_BatchForSpeed);

void BM_PlanInitial37Nodes(benchmark::State& state) {
  const Scenario sc = load_scenario(fixture("csd36_mobilenet.cfg"));
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_initial(sc.nodes, sc.models, sc.dataset));
  }
}
BENCHMARK(BM_PlanInitial37Nodes);

void BM_ShuffleAssignment(benchmark::State& state) {
  const Scenario sc = load_scenario(fixture("csd36_mobilenet.cfg"));
  const BatchPlan plan = plan_initial(sc.nodes, sc.models, sc.dataset);
  int epoch = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(shuffle_assignment(sc.dataset, plan, epoch++, sc.seed));
  }
}
BENCHMARK(BM_ShuffleAssignment);

void BM_SimThreeNodeEpoch(benchmark::State& state) {
  Scenario sc = load_scenario(fixture("three_node.cfg"));
  sc.epochs = 1;
  sc.events.clear();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(sc));
  }
}
BENCHMARK(BM_SimThreeNodeEpoch);

void BM_WireRoundTrip(benchmark::State& state) {
  PlanMsg plan;
  plan.generation = 3;
  plan.steps_per_epoch = 416;
  for (int i = 0; i < 37; ++i) {
    plan.entries.push_back(PlanEntry{"node-" + std::to_string(i), 180, 75000ull * i, 75000});
  }
  for (auto _ : state) {
    const std::vector<std::uint8_t> frame = encode_frame(plan);
    benchmark::DoNotOptimize(
        decode_payload(MsgType::Plan, frame.data() + 5, frame.size() - 5));
  }
}
BENCHMARK(BM_WireRoundTrip);

}  // namespace

BENCHMARK_MAIN();
