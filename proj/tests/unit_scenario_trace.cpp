#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hypertune/errors.hpp"
#include "hypertune/scenario.hpp"
#include "hypertune/trace.hpp"
#include "test_util.hpp"

using namespace hypertune;

TEST_CASE("fixture scenarios parse with the expected shape") {
  const Scenario three = load_scenario(testutil::fixture_path("three_node.cfg"));
  CHECK(three.name == "three_node");
  CHECK(three.seed == 42);
  CHECK(three.epochs == 3);
  CHECK(three.timing_noise == 0.0);
  REQUIRE(three.nodes.size() == 3);
  CHECK(three.nodes[1].node_id == "node-b");
  CHECK(three.nodes[1].core_count == 8);
  CHECK_FALSE(three.nodes[1].is_storage_node);
  CHECK(three.models.at("xeon8").points().size() == 6);
  CHECK(three.degradation.at("xeon8").count(4) == 1);
  CHECK(three.degradation.at("xeon8").count(6) == 1);
  REQUIRE(three.events.size() == 1);
  CHECK(three.events[0].node_id == "node-b");
  CHECK(three.events[0].cores_taken == 6);
  CHECK(three.controller.enabled);
  CHECK(three.controller.policy.mode == RetunePolicy::Mode::SpeedInterpolation);

  const Scenario csd = load_scenario(testutil::fixture_path("csd36_mobilenet.cfg"));
  CHECK(csd.nodes.size() == 37);
  CHECK(csd.dataset.total_samples == 300000);
  CHECK(csd.dataset.public_samples == 300000 - 36 * 2000);
  CHECK(csd.dataset.private_count("csd-07") == 2000);
  CHECK(csd.node("csd-07").is_storage_node);
  CHECK(csd.node("csd-07").owned_private_samples == 2000);
  // canonical id layout: private blocks ascending by node id, then public
  CHECK(csd.dataset.private_range("csd-01").begin == 0);
  CHECK(csd.dataset.private_range("csd-02").begin == 2000);
  CHECK(csd.dataset.public_range().begin == 72000);
  CHECK(csd.dataset.public_range().end == 300000);
}

TEST_CASE("scenario validation rejects inconsistent inputs") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in, "inline");
  };
  const std::string base =
      "name t\nepochs 1\nnoise 0\n[nodes]\na x 8 host\n[models]\nx 10:5.0 20:9.0\n"
      "[dataset]\ntotal 100\n";

  CHECK_NOTHROW(parse(base));
  CHECK_THROWS_AS(parse(base + "[events]\n5.0 a 4\n"), Error);  // no degradation entry
  CHECK_NOTHROW(parse(base + "[degradation]\nx 4 factor 0.5\n[events]\n5.0 a 4\n"));
  CHECK_THROWS_AS(parse(base + "[degradation]\nx 4 factor 1.5\n[events]\n5.0 a 4\n"), Error);
  CHECK_THROWS_AS(parse(base + "[events]\n5.0 nosuch 0\n"), Error);
  CHECK_THROWS_AS(parse(base + "[dataset]\nprivate a 500\n"), Error);  // exceeds total
  CHECK_THROWS_AS(parse("name t\n[nodes]\na x 8 host\na x 8 host\n[models]\nx 10:5.0 20:9.0\n"
                        "[dataset]\ntotal 100\n"),
                  Error);
  CHECK_THROWS_AS(parse("name t\n[nodes]\na x 8 host\n[dataset]\ntotal 100\n[models]\n"
                        "x 10:5.0\n"),
                  Error);  // single-point model
  CHECK_THROWS_AS(parse(base + "[controller]\nmode sideways\n"), Error);
  CHECK_THROWS_AS(parse(base + "[bogus]\nkey 1\n"), Error);
  CHECK_THROWS_AS(parse("epochs 1\n[nodes]\na x 8 host\n[models]\nx 10:5.0 20:9.0\n"), Error);

  // live-mode scenarios may omit [models]
  CHECK_NOTHROW(parse("name live\n[nodes]\na x 8 host\n[dataset]\ntotal 100\n"));
}

TEST_CASE("trace csv round trips and pins its header") {
  SimTrace trace;
  TraceRow row;
  row.time_s = 1.25;
  row.epoch = 0;
  row.step = 3;
  row.generation = 1;
  row.node_id = "node-a";
  row.throughput = 31.15;
  row.cluster_throughput = 93.45;
  row.event = "workload cores=6";
  row.decision = "FLAG";
  trace.rows.push_back(row);
  row.step = -1;
  row.event.clear();
  row.decision = "PLAN gen=1 bs=101 share=65727 steps=650";
  trace.rows.push_back(row);

  std::stringstream buf;
  write_trace_csv(trace, buf);
  const std::string text = buf.str();
  CHECK(text.rfind("time_s,epoch,step,generation,node_id,throughput,cluster_throughput,"
                   "event,decision\n",
                   0) == 0);

  const SimTrace back = read_trace_csv(buf);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].node_id == "node-a");
  CHECK(back.rows[0].event == "workload cores=6");
  CHECK(back.rows[0].decision == "FLAG");
  CHECK(back.rows[0].throughput == doctest::Approx(31.15));
  CHECK(back.rows[1].step == -1);
  CHECK(back.rows[1].decision == "PLAN gen=1 bs=101 share=65727 steps=650");

  std::stringstream empty;
  CHECK_THROWS_AS(read_trace_csv(empty), Error);
  std::stringstream bad("wrong,header\n");
  CHECK_THROWS_AS(read_trace_csv(bad), Error);
}

TEST_CASE("speed model files round trip through disk") {
  const SpeedModel m = testutil::model({{20, 8.0}, {180, 31.15}}, "xeon8");
  const std::string path = "/tmp/hypertune_test_model.speedmodel";
  m.save(path);
  const SpeedModel back = SpeedModel::load(path);
  CHECK(back.node_class() == "xeon8");
  CHECK(back.points().size() == 2);
  CHECK_THROWS_AS(SpeedModel::load("/tmp/does_not_exist.speedmodel"), Error);
}

TEST_CASE("scenarios can pull models from speed model files") {
  const SpeedModel m = testutil::model({{20, 8.0}, {180, 31.15}}, "whatever");
  m.save("/tmp/hypertune_ref_model.speedmodel");
  std::ofstream cfg("/tmp/hypertune_ref_scenario.cfg");
  cfg << "name ref\n[nodes]\na x 8 host\n[models]\nx @hypertune_ref_model.speedmodel\n"
         "[dataset]\ntotal 1000\n";
  cfg.close();
  const Scenario sc = load_scenario("/tmp/hypertune_ref_scenario.cfg");
  REQUIRE(sc.models.count("x") == 1);
  CHECK(sc.models.at("x").node_class() == "x");  // rebound to the scenario class
  CHECK(sc.models.at("x").points().size() == 2);
  CHECK(sc.models.at("x").speed_at(180) == doctest::Approx(31.15));
}
