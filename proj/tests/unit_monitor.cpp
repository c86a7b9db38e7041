#include <cmath>
#include <random>

#include "doctest.h"
#include "hypertune/errors.hpp"
#include "hypertune/monitor.hpp"
#include "test_util.hpp"

using namespace hypertune;

namespace {

BatchPlan simple_plan(int generation, std::int64_t steps, const std::vector<std::string>& nodes,
                      int batch = 180) {
  BatchPlan plan;
  plan.generation = generation;
  plan.steps_per_epoch = steps;
  plan.predicted_step_time = 1.0;
  for (const std::string& n : nodes) {
    plan.batch_sizes[n] = batch;
    plan.dataset_shares[n] = steps * batch;
  }
  return plan;
}

StepReport report(const std::string& node, int gen, std::int64_t step, double thr,
                  double cpu = 8.0) {
  StepReport r;
  r.node_id = node;
  r.generation = gen;
  r.step_index = step;
  r.measured_throughput = thr;
  r.cpu_utilization = cpu;
  r.wall_time = 180.0 / thr;
  return r;
}

Monitor make_monitor(const BatchPlan& plan, double reference) {
  Monitor m;
  std::map<std::string, double> refs;
  for (const auto& [node, bs] : plan.batch_sizes) {
    refs[node] = reference;
    m.set_normal_cpu(node, 8.0);
  }
  m.adopt_plan(plan, refs);
  return m;
}

}  // namespace

TEST_CASE("decline_index matches the weighted-sum examples") {
  CHECK(decline_index(31.1, 31.1, 416, 416) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(decline_index(31.1, 15.55, 100, 416) ==
        doctest::Approx(0.7 * 0.5 + 0.3 * 316.0 / 416.0).epsilon(1e-12));
  CHECK(decline_index(31.1, 15.55, 100, 416) == doctest::Approx(0.57788461538).epsilon(1e-9));
  // zero speed loss at epoch start still scores 0.30 from the progress term
  CHECK(decline_index(31.1, 31.1, 0, 416) == doctest::Approx(0.30).epsilon(1e-12));
}

TEST_CASE("decline_index stays in [0,1] and clamps at zero for fast nodes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> sp(0.1, 100.0);
  std::uniform_int_distribution<std::int64_t> steps(1, 5000);
  for (int i = 0; i < 2000; ++i) {
    const double reference = sp(rng);
    const std::int64_t n = steps(rng);
    std::uniform_real_distribution<double> meas(0.0001, reference);
    std::uniform_int_distribution<std::int64_t> st(0, n);
    const double v = decline_index(reference, meas(rng), st(rng), n);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // a node running above reference near the epoch end cannot go negative
  CHECK(decline_index(20.0, 40.0, 999, 1000) == 0.0);
}

TEST_CASE("steady state produces no flags across a whole epoch") {
  const std::vector<std::string> nodes{"a", "b", "c"};
  const BatchPlan plan = simple_plan(0, 416, nodes);
  Monitor monitor = make_monitor(plan, 31.1);
  for (std::int64_t s = 0; s < 416; ++s) {
    std::vector<StepReport> reports;
    for (const std::string& n : nodes) reports.push_back(report(n, 0, s, 31.1));
    const MonitorDecision d = monitor.observe(reports, plan);
    CHECK_FALSE(d.terminate());
    CHECK(d.flagged.empty());
  }
}

TEST_CASE("a sustained 50% decline terminates at the fifth consecutive flag") {
  const std::vector<std::string> nodes{"a", "b", "c"};
  const BatchPlan plan = simple_plan(0, 416, nodes);
  Monitor monitor = make_monitor(plan, 31.1);
  std::int64_t terminated_at = -1;
  for (std::int64_t s = 0; s < 416 && terminated_at < 0; ++s) {
    std::vector<StepReport> reports;
    for (const std::string& n : nodes) {
      const double thr = (n == "b" && s >= 100) ? 15.55 : 31.1;
      reports.push_back(report(n, 0, s, thr));
    }
    const MonitorDecision d = monitor.observe(reports, plan);
    if (s >= 100 && s <= 104) {
      REQUIRE(d.flagged.size() == 1);
      CHECK(d.flagged.front().node_id == "b");
    }
    if (d.terminate()) terminated_at = s;
  }
  CHECK(terminated_at == 104);
}

TEST_CASE("a four-step transient is absorbed by the hysteresis") {
  const std::vector<std::string> nodes{"a", "b"};
  const BatchPlan plan = simple_plan(0, 400, nodes);
  Monitor monitor = make_monitor(plan, 31.1);
  for (std::int64_t s = 0; s < 400; ++s) {
    const bool dip = s >= 50 && s < 54;  // exactly 4 flagged steps
    std::vector<StepReport> reports{report("a", 0, s, 31.1),
                                    report("b", 0, s, dip ? 12.0 : 31.1)};
    const MonitorDecision d = monitor.observe(reports, plan);
    CHECK_FALSE(d.terminate());
  }
}

TEST_CASE("mild slowdowns never flag thanks to the decline gate") {
  const std::vector<std::string> nodes{"a"};
  const BatchPlan plan = simple_plan(0, 500, nodes);
  Monitor monitor = make_monitor(plan, 31.1);
  for (std::int64_t s = 0; s < 500; ++s) {
    // within 5% of reference: the progress term alone may exceed 0.2 but the
    // gate keeps the step unflagged
    std::vector<StepReport> reports{report("a", 0, s, 31.1 * 0.96)};
    const MonitorDecision d = monitor.observe(reports, plan);
    CHECK(d.flagged.empty());
  }
}

TEST_CASE("stale reports are discarded and missing ones rejected") {
  const std::vector<std::string> nodes{"a", "b"};
  const BatchPlan plan = simple_plan(2, 400, nodes);
  Monitor monitor = make_monitor(plan, 31.1);

  std::vector<StepReport> with_stale{report("a", 2, 0, 31.1), report("b", 2, 0, 31.1),
                                     report("a", 1, 7, 10.0)};
  CHECK_NOTHROW(monitor.observe(with_stale, plan));
  CHECK(monitor.discarded_reports() == 1);

  std::vector<StepReport> missing{report("a", 2, 1, 31.1)};
  CHECK_THROWS_AS(monitor.observe(missing, plan), Error);

  std::vector<StepReport> only_stale{report("a", 1, 2, 31.1), report("b", 2, 2, 31.1)};
  CHECK_THROWS_AS(monitor.observe(only_stale, plan), Error);

  std::vector<StepReport> future{report("a", 3, 2, 31.1), report("b", 2, 2, 31.1)};
  try {
    monitor.observe(future, plan);
    FAIL("expected GenerationMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::GenerationMismatch);
  }

  std::vector<StepReport> skewed{report("a", 2, 3, 31.1), report("b", 2, 4, 31.1)};
  CHECK_THROWS_AS(monitor.observe(skewed, plan), Error);

  std::vector<StepReport> duplicated{report("a", 2, 5, 31.1), report("a", 2, 5, 30.0),
                                     report("b", 2, 5, 31.1)};
  CHECK_THROWS_AS(monitor.observe(duplicated, plan), Error);
}

TEST_CASE("cpu_retune_hint scales the batch by the cpu ratio") {
  const std::vector<std::string> nodes{"a"};
  const BatchPlan plan = simple_plan(0, 400, nodes);
  Monitor monitor = make_monitor(plan, 31.1);

  CHECK_THROWS_AS(monitor.cpu_retune_hint("a", 180), Error);  // empty window

  for (std::int64_t s = 0; s < 6; ++s) {
    std::vector<StepReport> reports{report("a", 0, s, 31.1, 2.0)};
    monitor.observe(reports, plan);
  }
  CHECK(monitor.cpu_retune_hint("a", 180) == 45);  // 180 * 2 / 8

  for (std::int64_t s = 6; s < 12; ++s) {
    std::vector<StepReport> reports{report("a", 0, s, 31.1, 8.0)};
    monitor.observe(reports, plan);
  }
  CHECK(monitor.cpu_retune_hint("a", 180) == 180);  // ratio 1
  CHECK(monitor.cpu_retune_hint("a", 100) == 100);
}

TEST_CASE("windows stay bounded and reset on generation change") {
  const std::vector<std::string> nodes{"a"};
  BatchPlan plan = simple_plan(0, 400, nodes);
  Monitor monitor = make_monitor(plan, 31.1);

  for (std::int64_t s = 0; s < 4; ++s) {  // one short of termination
    std::vector<StepReport> reports{report("a", 0, s, 14.0)};
    CHECK_FALSE(monitor.observe(reports, plan).terminate());
  }
  CHECK(monitor.cpu_window_size("a") <= Monitor::kCpuWindow);

  // generation change clears evidence: 4 more flagged steps do not terminate
  BatchPlan next = plan;
  next.generation = 1;
  std::map<std::string, double> refs{{"a", 31.1}};
  monitor.adopt_plan(next, refs);
  CHECK(monitor.cpu_window_size("a") == 0);
  for (std::int64_t s = 0; s < 4; ++s) {
    std::vector<StepReport> reports{report("a", 1, s, 14.0)};
    CHECK_FALSE(monitor.observe(reports, next).terminate());
  }
  // the fifth consecutive one does
  std::vector<StepReport> reports{report("a", 1, 4, 14.0)};
  CHECK(monitor.observe(reports, next).terminate());

  for (std::int64_t s = 5; s < 40; ++s) {
    std::vector<StepReport> r2{report("a", 1, s, 31.1, 6.0)};
    monitor.observe(r2, next);
  }
  CHECK(monitor.cpu_window_size("a") == Monitor::kCpuWindow);
}

TEST_CASE("identical report sequences give identical decision sequences") {
  const std::vector<std::string> nodes{"a", "b"};
  const BatchPlan plan = simple_plan(0, 300, nodes);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> thr(10.0, 32.0);
  std::vector<std::vector<StepReport>> stream;
  for (std::int64_t s = 0; s < 200; ++s) {
    stream.push_back({report("a", 0, s, thr(rng)), report("b", 0, s, thr(rng))});
  }
  auto run_stream = [&] {
    Monitor monitor = make_monitor(plan, 31.1);
    std::vector<int> kinds;
    std::vector<std::size_t> flag_counts;
    for (const auto& reports : stream) {
      const MonitorDecision d = monitor.observe(reports, plan);
      kinds.push_back(static_cast<int>(d.kind));
      flag_counts.push_back(d.flagged.size());
      if (d.terminate()) break;
    }
    return std::make_pair(kinds, flag_counts);
  };
  CHECK(run_stream() == run_stream());
}
