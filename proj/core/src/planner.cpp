#include "hypertune/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hypertune/errors.hpp"
#include "hypertune/log.hpp"

namespace hypertune {

void DatasetSpec::validate() const {
  if (total_samples < 1) fail(Errc::ScenarioError, "dataset must have at least one sample");
  std::int64_t priv = 0;
  for (const auto& [node, count] : private_samples) {
    if (count < 0) fail(Errc::ScenarioError, "negative private sample count for " + node);
    priv += count;
  }
  if (public_samples < 0 || priv + public_samples != total_samples) {
    fail(Errc::ScenarioError, "public + private sample counts must equal the dataset size");
  }
}

std::int64_t DatasetSpec::private_count(const std::string& node_id) const {
  auto it = private_samples.find(node_id);
  return it == private_samples.end() ? 0 : it->second;
}

DatasetSpec::IdRange DatasetSpec::private_range(const std::string& node_id) const {
  std::int64_t offset = 0;
  for (const auto& [node, count] : private_samples) {  // std::map: ascending node_id
    if (node == node_id) return {offset, offset + count};
    offset += count;
  }
  return {offset, offset};
}

DatasetSpec::IdRange DatasetSpec::public_range() const {
  return {total_samples - public_samples, total_samples};
}

std::int64_t BatchPlan::total_batch() const {
  std::int64_t sum = 0;
  for (const auto& [node, bs] : batch_sizes) sum += bs;
  return sum;
}

std::int64_t BatchPlan::share_offset(const std::string& node_id) const {
  std::int64_t offset = 0;
  for (const auto& [node, share] : dataset_shares) {
    if (node == node_id) return offset;
    offset += share;
  }
  return offset;
}

std::string select_anchor(const std::vector<NodeProfile>& nodes,
                          const std::map<std::string, SpeedModel>& models) {
  std::map<std::string, int> class_counts;
  for (const NodeProfile& n : nodes) class_counts[n.node_class] += 1;

  std::string best;
  double best_product = -1.0;
  double best_peak = -1.0;
  for (const auto& [cls, count] : class_counts) {
    auto it = models.find(cls);
    if (it == models.end()) fail(Errc::MissingModel, "no speed model for class " + cls);
    const double peak = it->second.peak_throughput();
    const double product = peak * count;
    const bool better = product > best_product ||
                        (product == best_product && peak > best_peak) ||
                        (product == best_product && peak == best_peak && cls < best);
    if (best.empty() || better) {
      best = cls;
      best_product = product;
      best_peak = peak;
    }
  }
  return best;
}

EqualizeResult equalize_batch(const SpeedModel& model, double target_step_time,
                              double capacity_factor) {
  const auto& pts = model.points();
  const double scale = capacity_factor;

  // Exact solutions of BS / (scale * SP(BS)) = T per linear segment.
  int best_exact = 0;
  bool have_exact = false;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double b0 = pts[i - 1].batch_size;
    const double b1 = pts[i].batch_size;
    const double s0 = scale * pts[i - 1].throughput;
    const double s1 = scale * pts[i].throughput;
    const double a = (s1 - s0) / (b1 - b0);
    const double c = s0 - a * b0;
    const double denom = 1.0 - target_step_time * a;
    double solution;
    if (std::abs(denom) < 1e-12) {
      continue;  // step time constant on this segment, no isolated root
    }
    solution = target_step_time * c / denom;
    if (solution >= b0 - 1e-9 && solution <= b1 + 1e-9) {
      const int rounded = static_cast<int>(std::lround(std::clamp(solution, b0, b1)));
      // Prefer the largest exact solution: same step time, more samples.
      if (!have_exact || rounded > best_exact) {
        best_exact = rounded;
        have_exact = true;
      }
    }
  }
  if (have_exact) return {std::max(1, best_exact), true};

  // No segment contains a root: fall back to the knot closest in step time.
  int best_batch = pts.front().batch_size;
  double best_err = std::abs(pts.front().batch_size / (scale * pts.front().throughput) -
                             target_step_time);
  for (const SpeedPoint& p : pts) {
    const double err = std::abs(p.batch_size / (scale * p.throughput) - target_step_time);
    if (err < best_err) {
      best_err = err;
      best_batch = p.batch_size;
    }
  }
  return {best_batch, false};
}

namespace {

// Eq.-1-style proportional split with largest-remainder rounding repair and
// private-sample pinning. Shares always sum exactly to the dataset size and
// every node's share covers its own private samples.
std::map<std::string, std::int64_t> assign_shares(
    const std::map<std::string, int>& batch_sizes, const DatasetSpec& dataset) {
  dataset.validate();
  std::int64_t total_batch = 0;
  for (const auto& [node, bs] : batch_sizes) {
    if (bs < 1) fail(Errc::ScenarioError, "batch size must be >= 1 for node " + node);
    total_batch += bs;
  }

  struct Row {
    std::string node;
    std::int64_t floor_share;
    double remainder;
  };
  std::vector<Row> rows;
  rows.reserve(batch_sizes.size());
  std::int64_t assigned = 0;
  for (const auto& [node, bs] : batch_sizes) {
    const double exact = static_cast<double>(bs) / static_cast<double>(total_batch) *
                         static_cast<double>(dataset.total_samples);
    const std::int64_t fl = static_cast<std::int64_t>(std::floor(exact));
    rows.push_back(Row{node, fl, exact - static_cast<double>(fl)});
    assigned += fl;
  }
  std::int64_t residue = dataset.total_samples - assigned;
  // Hand out the residue one sample at a time to the largest remainders;
  // ties go to the lexicographically smaller node id.
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a].remainder != rows[b].remainder) return rows[a].remainder > rows[b].remainder;
    return rows[a].node < rows[b].node;
  });
  for (std::size_t k = 0; residue > 0; k = (k + 1) % order.size(), --residue) {
    rows[order[k]].floor_share += 1;
  }

  std::map<std::string, std::int64_t> shares;
  for (const Row& r : rows) shares[r.node] = r.floor_share;

  // Privacy pinning: a node's share must cover its own private samples. The
  // shortfall is absorbed by other nodes' public headroom.
  std::int64_t deficit_total = 0;
  for (auto& [node, share] : shares) {
    const std::int64_t priv = dataset.private_count(node);
    if (priv > share) {
      const std::int64_t deficit = priv - share;
      if (deficit > dataset.public_samples) {
        fail(Errc::Infeasible,
             "node " + node + " owns " + std::to_string(priv) +
                 " private samples but its proportional share is " + std::to_string(share) +
                 "; deficit exceeds the public slack of " +
                 std::to_string(dataset.public_samples));
      }
      share = priv;
      deficit_total += deficit;
    }
  }
  if (deficit_total > 0) {
    // Take the overdraft back from the nodes with public headroom,
    // proportionally, largest first.
    std::vector<std::pair<std::string, std::int64_t>> headroom;
    std::int64_t headroom_total = 0;
    for (const auto& [node, share] : shares) {
      const std::int64_t h = share - dataset.private_count(node);
      if (h > 0) {
        headroom.emplace_back(node, h);
        headroom_total += h;
      }
    }
    std::stable_sort(headroom.begin(), headroom.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::int64_t remaining = deficit_total;
    for (std::size_t i = 0; i < headroom.size() && remaining > 0; ++i) {
      const std::int64_t take =
          std::min({headroom[i].second,
                    (deficit_total * headroom[i].second + headroom_total - 1) / headroom_total,
                    remaining});
      shares[headroom[i].first] -= take;
      remaining -= take;
    }
    for (std::size_t i = 0; i < headroom.size() && remaining > 0; ++i) {
      const std::int64_t left = shares[headroom[i].first] - dataset.private_count(headroom[i].first);
      const std::int64_t take = std::min(left, remaining);
      shares[headroom[i].first] -= take;
      remaining -= take;
    }
    if (remaining > 0) {
      fail(Errc::Infeasible, "private holdings leave no public headroom to balance shares");
    }
  }
  return shares;
}

std::int64_t steps_for(const std::map<std::string, int>& batch_sizes,
                       const DatasetSpec& dataset) {
  std::int64_t total_batch = 0;
  for (const auto& [node, bs] : batch_sizes) total_batch += bs;
  const std::int64_t steps = dataset.total_samples / total_batch;
  if (steps < 1) {
    fail(Errc::Infeasible, "dataset smaller than one cluster step (" +
                               std::to_string(dataset.total_samples) + " samples vs batch sum " +
                               std::to_string(total_batch) + ")");
  }
  return steps;
}

}  // namespace

BatchPlan plan_initial(const std::vector<NodeProfile>& nodes,
                       const std::map<std::string, SpeedModel>& models,
                       const DatasetSpec& dataset) {
  if (nodes.empty()) fail(Errc::ScenarioError, "cannot plan for an empty cluster");
  const std::string anchor_class = select_anchor(nodes, models);
  const SpeedModel& anchor_model = models.at(anchor_class);
  if (anchor_model.plateau_is_degenerate()) {
    log_warn("speed curve for class " + anchor_class +
             " has no saturation plateau; using the largest probed batch");
  }
  const int anchor_batch = anchor_model.plateau_start_batch();
  const double target_step_time =
      static_cast<double>(anchor_batch) / anchor_model.speed_at(anchor_batch);

  BatchPlan plan;
  plan.generation = 0;
  double predicted = 0.0;
  for (const NodeProfile& node : nodes) {
    auto it = models.find(node.node_class);
    if (it == models.end()) fail(Errc::MissingModel, "no speed model for class " + node.node_class);
    int batch;
    if (node.node_class == anchor_class) {
      batch = anchor_batch;
    } else {
      batch = equalize_batch(it->second, target_step_time).batch_size;
    }
    plan.batch_sizes[node.node_id] = batch;
    predicted = std::max(predicted, batch / it->second.speed_at(batch));
  }
  plan.predicted_step_time = predicted;
  plan.dataset_shares = assign_shares(plan.batch_sizes, dataset);
  plan.steps_per_epoch = steps_for(plan.batch_sizes, dataset);
  return plan;
}

std::string plan_decision_string(const BatchPlan& plan, const std::string& node_id) {
  return "PLAN gen=" + std::to_string(plan.generation) +
         " bs=" + std::to_string(plan.batch_sizes.at(node_id)) +
         " share=" + std::to_string(plan.dataset_shares.at(node_id)) +
         " steps=" + std::to_string(plan.steps_per_epoch);
}

bool parse_plan_decision(const std::string& decision, int& generation, int& batch_size,
                         std::int64_t& share, std::int64_t& steps_per_epoch) {
  long long sh = 0, st = 0;
  if (std::sscanf(decision.c_str(), "PLAN gen=%d bs=%d share=%lld steps=%lld", &generation,
                  &batch_size, &sh, &st) != 4) {
    return false;
  }
  share = sh;
  steps_per_epoch = st;
  return true;
}

BatchPlan replan(const BatchPlan& previous, const std::map<std::string, int>& new_batch_sizes,
                 const DatasetSpec& dataset) {
  for (const auto& [node, bs] : previous.batch_sizes) {
    if (new_batch_sizes.find(node) == new_batch_sizes.end()) {
      fail(Errc::ScenarioError, "replan batch sizes missing node " + node);
    }
  }
  BatchPlan plan;
  plan.generation = previous.generation + 1;
  plan.batch_sizes = new_batch_sizes;
  plan.predicted_step_time = previous.predicted_step_time;
  plan.dataset_shares = assign_shares(plan.batch_sizes, dataset);
  plan.steps_per_epoch = steps_for(plan.batch_sizes, dataset);
  return plan;
}

}  // namespace hypertune
