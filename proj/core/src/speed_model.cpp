#include "hypertune/speed_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hypertune/errors.hpp"

namespace hypertune {
namespace {

void validate_points(const std::vector<SpeedPoint>& points) {
  if (points.size() < 2) {
    fail(Errc::NonMonotonic, "speed model needs at least 2 distinct batch sizes, got " +
                                 std::to_string(points.size()));
  }
  double running_max = 0.0;
  int prev_batch = 0;
  for (const SpeedPoint& p : points) {
    if (p.batch_size < 1) fail(Errc::OutOfRange, "batch size must be >= 1");
    if (p.batch_size <= prev_batch) {
      fail(Errc::NonMonotonic, "batch sizes must be strictly increasing");
    }
    if (!(p.throughput > 0.0)) fail(Errc::OutOfRange, "throughput must be > 0");
    if (p.throughput < running_max * (1.0 - SpeedModel::kMonotonicityTolerance)) {
      fail(Errc::NonMonotonic,
           "throughput at batch " + std::to_string(p.batch_size) + " dips more than " +
               std::to_string(100.0 * SpeedModel::kMonotonicityTolerance) +
               "% below the running maximum");
    }
    running_max = std::max(running_max, p.throughput);
    prev_batch = p.batch_size;
  }
}

}  // namespace

SpeedModel::SpeedModel(std::string node_class, std::vector<SpeedPoint> points)
    : node_class_(std::move(node_class)), points_(std::move(points)) {
  validate_points(points_);
}

double SpeedModel::min_throughput() const {
  double v = points_.front().throughput;
  for (const SpeedPoint& p : points_) v = std::min(v, p.throughput);
  return v;
}

double SpeedModel::max_throughput() const {
  double v = points_.front().throughput;
  for (const SpeedPoint& p : points_) v = std::max(v, p.throughput);
  return v;
}

int SpeedModel::plateau_start_batch() const {
  const double cutoff = kPlateauFraction * max_throughput();
  for (const SpeedPoint& p : points_) {
    if (p.throughput >= cutoff) return p.batch_size;
  }
  return points_.back().batch_size;
}

bool SpeedModel::plateau_is_degenerate() const {
  return plateau_start_batch() == points_.back().batch_size;
}

bool SpeedModel::is_monotone() const {
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (points_[i].throughput < points_[i - 1].throughput) return false;
  }
  return true;
}

double SpeedModel::speed_at(double batch_size) const {
  if (batch_size < min_batch() || batch_size > max_batch()) {
    fail(Errc::OutOfRange, "batch " + std::to_string(batch_size) + " outside probed range [" +
                               std::to_string(min_batch()) + ", " + std::to_string(max_batch()) +
                               "] of class " + node_class_);
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const SpeedPoint& lo = points_[i - 1];
    const SpeedPoint& hi = points_[i];
    if (batch_size <= hi.batch_size) {
      const double t = (batch_size - lo.batch_size) /
                       static_cast<double>(hi.batch_size - lo.batch_size);
      return lo.throughput + t * (hi.throughput - lo.throughput);
    }
  }
  return points_.back().throughput;
}

int SpeedModel::batch_for_speed(double target_throughput, bool eq3_literal) const {
  const double lo_thr = min_throughput();
  const double hi_thr = max_throughput();
  if (target_throughput < lo_thr || target_throughput > hi_thr) {
    fail(Errc::OutOfRange,
         "target throughput " + std::to_string(target_throughput) + " outside model span [" +
             std::to_string(lo_thr) + ", " + std::to_string(hi_thr) + "]");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const SpeedPoint& lo = points_[i - 1];
    const SpeedPoint& hi = points_[i];
    const double sp_n = lo.throughput;
    const double sp_n1 = hi.throughput;
    if (target_throughput < std::min(sp_n, sp_n1) || target_throughput > std::max(sp_n, sp_n1)) {
      continue;
    }
    if (sp_n1 == sp_n) {
      // Plateau segment: any batch in it runs at the target; take the cheaper.
      return lo.batch_size;
    }
    const double w = (target_throughput - sp_n) / (sp_n1 - sp_n);
    double batch;
    if (eq3_literal) {
      batch = lo.batch_size * w + hi.batch_size * (1.0 - w);
    } else {
      batch = lo.batch_size + (hi.batch_size - lo.batch_size) * w;
    }
    return static_cast<int>(std::lround(batch));
  }
  // Target is inside the global span but not bracketed by any segment (can
  // only happen with tolerated non-monotone dips); snap to the closest knot.
  int best_batch = points_.front().batch_size;
  double best_err = std::abs(points_.front().throughput - target_throughput);
  for (const SpeedPoint& p : points_) {
    const double err = std::abs(p.throughput - target_throughput);
    if (err < best_err) {
      best_err = err;
      best_batch = p.batch_size;
    }
  }
  return best_batch;
}

SpeedModel SpeedModel::degraded(double capacity_factor) const {
  if (!(capacity_factor > 0.0) || capacity_factor > 1.0) {
    fail(Errc::InvalidFactor,
         "capacity factor must be in (0, 1], got " + std::to_string(capacity_factor));
  }
  std::vector<SpeedPoint> scaled = points_;
  for (SpeedPoint& p : scaled) p.throughput *= capacity_factor;
  return SpeedModel(node_class_, std::move(scaled));
}

void SpeedModel::write(std::ostream& out) const {
  out << "speedmodel " << node_class_ << "\n";
  for (const SpeedPoint& p : points_) {
    out << p.batch_size << " " << p.throughput << "\n";
  }
}

SpeedModel SpeedModel::read(std::istream& in) {
  std::string header, tag, node_class;
  if (!std::getline(in, header)) fail(Errc::ScenarioError, "empty speed model stream");
  std::istringstream hs(header);
  if (!(hs >> tag >> node_class) || tag != "speedmodel") {
    fail(Errc::ScenarioError, "bad speed model header: '" + header + "'");
  }
  std::vector<SpeedPoint> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    SpeedPoint p;
    if (!(ls >> p.batch_size >> p.throughput)) {
      fail(Errc::ScenarioError, "bad speed model line: '" + line + "'");
    }
    points.push_back(p);
  }
  return SpeedModel(node_class, std::move(points));
}

SpeedModel SpeedModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ScenarioError, "cannot open speed model file " + path);
  return read(in);
}

void SpeedModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(Errc::ScenarioError, "cannot write speed model file " + path);
  write(out);
}

SpeedModel benchmark_sweep(WorkloadExecutor& executor, const std::vector<int>& batch_sizes,
                           int steps_per_probe, const std::string& node_class) {
  if (batch_sizes.empty()) fail(Errc::ProbeFailure, "no batch sizes to probe");
  if (steps_per_probe < 1) fail(Errc::ProbeFailure, "steps_per_probe must be >= 1");
  for (std::size_t i = 1; i < batch_sizes.size(); ++i) {
    if (batch_sizes[i] <= batch_sizes[i - 1]) {
      fail(Errc::ProbeFailure, "batch sizes must be strictly increasing");
    }
  }

  std::vector<SpeedPoint> points;
  points.reserve(batch_sizes.size());
  for (int batch : batch_sizes) {
    if (batch < 1) fail(Errc::ProbeFailure, "batch size must be >= 1");
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(steps_per_probe));
    try {
      executor.run_timed_step(batch);  // warm-up, discarded
      for (int i = 0; i < steps_per_probe; ++i) {
        const double t = executor.run_timed_step(batch);
        if (!(t > 0.0)) fail(Errc::ProbeFailure, "non-positive step time from executor");
        times.push_back(t);
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(Errc::ProbeFailure, std::string("executor error: ") + e.what());
    }
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    const double median =
        (n % 2 == 1) ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    points.push_back(SpeedPoint{batch, static_cast<double>(batch) / median});
  }
  return SpeedModel(node_class, std::move(points));
}

}  // namespace hypertune
