#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hypertune/scenario.hpp"
#include "hypertune/trace.hpp"

namespace hypertune {

// Runs the scenario as a deterministic discrete-event simulation of
// synchronous data-parallel training: every step's wall time is the slowest
// node's compute time, step reports feed the monitor, and termination
// decisions drive the retuner exactly as the live coordinator would.
SimTrace run(const Scenario& scenario);

// Deterministic per-epoch sample order, keyed by (seed, epoch, generation).
// Private samples are permuted only within their owner's list; public
// samples are re-dealt across the public portions of all shares.
std::map<std::string, std::vector<std::int64_t>> shuffle_assignment(const DatasetSpec& dataset,
                                                                    const BatchPlan& plan,
                                                                    int epoch,
                                                                    std::uint64_t seed);

// Histogram over coverage counts: key = number of epochs a sample was
// included in a completed step, value = how many samples had that count.
std::map<std::uint32_t, std::int64_t> coverage_report(const SimTrace& trace);

}  // namespace hypertune
