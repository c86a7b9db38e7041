#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hypertune {

struct SpeedPoint {
  int batch_size = 0;       // samples per step, >= 1
  double throughput = 0.0;  // samples per second, > 0

  friend bool operator==(const SpeedPoint&, const SpeedPoint&) = default;
};

// Batch-size -> throughput table for one node class, built from a benchmark
// sweep. Queries interpolate piecewise-linearly between knots; no
// extrapolation outside the probed range.
class SpeedModel {
 public:
  // Measured throughput may dip at most this fraction below the running
  // maximum before the sweep is rejected as NonMonotonic.
  static constexpr double kMonotonicityTolerance = 0.03;
  // The saturation plateau starts at the smallest knot whose throughput is
  // within this fraction of the model maximum.
  static constexpr double kPlateauFraction = 0.99;

  SpeedModel() = default;
  SpeedModel(std::string node_class, std::vector<SpeedPoint> points);

  const std::string& node_class() const { return node_class_; }
  const std::vector<SpeedPoint>& points() const { return points_; }

  int min_batch() const { return points_.front().batch_size; }
  int max_batch() const { return points_.back().batch_size; }
  double min_throughput() const;
  double max_throughput() const;
  double peak_throughput() const { return max_throughput(); }

  // Smallest knot whose throughput reaches kPlateauFraction of the peak.
  int plateau_start_batch() const;
  // True when the plateau is only reached at the largest probed batch, i.e.
  // the curve is still climbing at the end of the probed range.
  bool plateau_is_degenerate() const;

  bool is_monotone() const;

  // Piecewise-linear interpolation; exact at knots. Throws OutOfRange for
  // batch sizes outside [min_batch, max_batch].
  double speed_at(double batch_size) const;

  // Inverse query: the batch size whose interpolated throughput equals
  // `target_throughput`, rounded to the nearest integer. On a flat segment
  // the smaller (cheaper) batch is returned. `eq3_literal` selects the
  // swapped-weight variant of the interpolation for diagnostics.
  int batch_for_speed(double target_throughput, bool eq3_literal = false) const;

  // Same model with every throughput multiplied by capacity_factor in (0,1].
  SpeedModel degraded(double capacity_factor) const;

  // Line-oriented text format:
  //   speedmodel <node_class>
  //   <batch_size> <throughput>
  //   ...
  void write(std::ostream& out) const;
  static SpeedModel read(std::istream& in);
  static SpeedModel load(const std::string& path);
  void save(const std::string& path) const;

  friend bool operator==(const SpeedModel&, const SpeedModel&) = default;

 private:
  std::string node_class_;
  std::vector<SpeedPoint> points_;
};

// One timed training step at a requested batch size.
class WorkloadExecutor {
 public:
  virtual ~WorkloadExecutor() = default;
  // Returns the wall time of the step in seconds.
  virtual double run_timed_step(int batch_size) = 0;
};

// Probes each batch size steps_per_probe times (plus one discarded warm-up)
// and builds a model from batch / median-step-time.
SpeedModel benchmark_sweep(WorkloadExecutor& executor,
                           const std::vector<int>& batch_sizes,
                           int steps_per_probe,
                           const std::string& node_class);

}  // namespace hypertune
