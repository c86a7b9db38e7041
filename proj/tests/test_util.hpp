#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hypertune/planner.hpp"
#include "hypertune/scenario.hpp"
#include "hypertune/speed_model.hpp"

namespace testutil {

inline hypertune::SpeedModel model(std::vector<hypertune::SpeedPoint> points,
                                   std::string cls = "test") {
  return hypertune::SpeedModel(std::move(cls), std::move(points));
}

// The two-knot model used throughout the interpolation examples.
inline hypertune::SpeedModel two_knot() {
  return model({{100, 20.0}, {200, 30.0}});
}

// Random monotone model: increasing batch knots, non-decreasing throughput.
inline hypertune::SpeedModel random_monotone_model(std::mt19937_64& rng, std::string cls,
                                                   int min_knots = 2, int max_knots = 10) {
  std::uniform_int_distribution<int> knot_count(min_knots, max_knots);
  std::uniform_int_distribution<int> batch_step(40, 400);
  std::uniform_real_distribution<double> thr_start(5.0, 50.0);
  std::uniform_real_distribution<double> thr_step(0.0, 20.0);
  const int knots = knot_count(rng);
  std::vector<hypertune::SpeedPoint> points;
  int batch = batch_step(rng);
  double thr = thr_start(rng);
  for (int i = 0; i < knots; ++i) {
    points.push_back({batch, thr});
    batch += batch_step(rng);
    thr += thr_step(rng);
  }
  return model(std::move(points), std::move(cls));
}

// Saturating curve c*b/(b+k) sampled on a grid; plateau shapes like the
// measured batch/speed sweeps.
inline hypertune::SpeedModel hyperbolic_model(double c, double k, int max_batch,
                                              std::string cls = "hyper") {
  std::vector<hypertune::SpeedPoint> points;
  for (int b = max_batch / 10; b <= max_batch; b += max_batch / 10) {
    points.push_back({b, c * b / (b + k)});
  }
  return model(std::move(points), std::move(cls));
}

inline hypertune::NodeProfile node(std::string id, std::string cls, int cores = 8,
                                   bool storage = false, std::int64_t priv = 0) {
  hypertune::NodeProfile n;
  n.node_id = std::move(id);
  n.node_class = std::move(cls);
  n.core_count = cores;
  n.is_storage_node = storage;
  n.owned_private_samples = priv;
  return n;
}

inline hypertune::DatasetSpec public_dataset(std::int64_t total) {
  hypertune::DatasetSpec d;
  d.total_samples = total;
  d.public_samples = total;
  return d;
}

inline std::string fixture_path(const std::string& name) {
  return std::string(HYPERTUNE_FIXTURES_DIR) + "/" + name;
}

}  // namespace testutil
