#include "hypertune/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hypertune/errors.hpp"

namespace hypertune {

void Scenario::validate() const {
  if (nodes.empty()) fail(Errc::ScenarioError, "scenario has no nodes");
  if (epochs < 1) fail(Errc::ScenarioError, "epochs must be >= 1");
  if (timing_noise < 0.0 || timing_noise >= 1.0) {
    fail(Errc::ScenarioError, "timing noise must be in [0, 1)");
  }
  std::map<std::string, int> seen;
  // A live-mode scenario may omit [models]; the coordinator builds them from
  // benchmark sweeps. Simulation requires them.
  const bool live_mode = models.empty();
  for (const NodeProfile& n : nodes) {
    if (++seen[n.node_id] > 1) fail(Errc::ScenarioError, "duplicate node id " + n.node_id);
    if (n.core_count < 1) fail(Errc::ScenarioError, "node " + n.node_id + " has no cores");
    if (!live_mode && models.find(n.node_class) == models.end()) {
      fail(Errc::ScenarioError, "no model for class " + n.node_class + " (node " + n.node_id + ")");
    }
  }
  dataset.validate();
  for (const auto& [node_id, count] : dataset.private_samples) {
    if (count > 0 && seen.find(node_id) == seen.end()) {
      fail(Errc::ScenarioError, "private samples assigned to unknown node " + node_id);
    }
  }
  double prev_time = 0.0;
  for (const WorkloadEvent& e : events) {
    if (e.at_time < prev_time) fail(Errc::ScenarioError, "events must be sorted by time");
    prev_time = e.at_time;
    const NodeProfile& n = node(e.node_id);
    if (e.cores_taken < 0 || e.cores_taken > n.core_count) {
      fail(Errc::ScenarioError, "event takes " + std::to_string(e.cores_taken) +
                                    " cores from " + e.node_id + " which has " +
                                    std::to_string(n.core_count));
    }
    if (e.cores_taken > 0) {
      auto cls_it = degradation.find(n.node_class);
      if (cls_it == degradation.end() ||
          cls_it->second.find(e.cores_taken) == cls_it->second.end()) {
        fail(Errc::ScenarioError, "no degradation entry for class " + n.node_class +
                                      " with cores_taken=" + std::to_string(e.cores_taken));
      }
    }
  }
  for (const auto& [cls, entries] : degradation) {
    if (models.find(cls) == models.end()) {
      fail(Errc::ScenarioError, "degradation references unknown class " + cls);
    }
    for (const auto& [cores, entry] : entries) {
      if (entry.is_factor && (!(entry.factor > 0.0) || entry.factor > 1.0)) {
        fail(Errc::ScenarioError, "degradation factor for " + cls + " must be in (0, 1]");
      }
    }
  }
}

const NodeProfile& Scenario::node(const std::string& node_id) const {
  for (const NodeProfile& n : nodes) {
    if (n.node_id == node_id) return n;
  }
  fail(Errc::ScenarioError, "unknown node " + node_id);
}

const SpeedModel& Scenario::model_of(const std::string& node_id) const {
  return models.at(node(node_id).node_class);
}

SpeedModel Scenario::active_model(const std::string& node_id, int cores_taken) const {
  const NodeProfile& n = node(node_id);
  const SpeedModel& nominal = models.at(n.node_class);
  if (cores_taken == 0) return nominal;
  const auto& entry = degradation.at(n.node_class).at(cores_taken);
  return entry.is_factor ? nominal.degraded(entry.factor) : entry.model;
}

namespace {

struct Parser {
  std::string origin;
  int line_no = 0;

  [[noreturn]] void error(const std::string& msg) const {
    fail(Errc::ScenarioError, origin + ":" + std::to_string(line_no) + ": " + msg);
  }

  std::vector<SpeedPoint> parse_points(std::istringstream& ls) const {
    std::vector<SpeedPoint> points;
    std::string pair;
    while (ls >> pair) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos) error("expected <batch>:<throughput>, got '" + pair + "'");
      try {
        points.push_back(SpeedPoint{std::stoi(pair.substr(0, colon)),
                                    std::stod(pair.substr(colon + 1))});
      } catch (const std::exception&) {
        error("bad speed point '" + pair + "'");
      }
    }
    return points;
  }
};

bool parse_on_off(const std::string& v, const Parser& p) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  p.error("expected on/off, got '" + v + "'");
}

}  // namespace

Scenario parse_scenario(std::istream& in, const std::string& origin) {
  Scenario sc;
  sc.timing_noise = 0.01;
  Parser p{origin};
  std::string section;
  std::string line;
  std::int64_t private_total = 0;
  bool have_total = false;

  while (std::getline(in, line)) {
    ++p.line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;

    if (first.front() == '[') {
      if (first.back() != ']') p.error("malformed section header " + first);
      section = first.substr(1, first.size() - 2);
      continue;
    }

    try {
      if (section.empty()) {
        std::string value;
        if (first == "name") {
          ls >> sc.name;
        } else if (first == "seed") {
          ls >> value;
          sc.seed = std::stoull(value);
        } else if (first == "epochs") {
          ls >> sc.epochs;
        } else if (first == "noise") {
          ls >> sc.timing_noise;
        } else if (first == "joules_per_step") {
          ls >> sc.joules_per_step;
        } else {
          p.error("unknown preamble key '" + first + "'");
        }
      } else if (section == "nodes") {
        NodeProfile n;
        n.node_id = first;
        std::string kind;
        if (!(ls >> n.node_class >> n.core_count >> kind)) {
          p.error("expected <node_id> <class> <cores> <host|csd>");
        }
        if (kind != "host" && kind != "csd") p.error("node kind must be host or csd");
        n.is_storage_node = (kind == "csd");
        sc.nodes.push_back(std::move(n));
      } else if (section == "models") {
        // either inline "<class> <bs>:<thr> ..." or "<class> @file.speedmodel"
        std::string peek;
        ls >> peek;
        if (!peek.empty() && peek.front() == '@') {
          std::string path = peek.substr(1);
          if (!path.empty() && path.front() != '/') {
            const auto slash = origin.find_last_of('/');
            if (slash != std::string::npos) path = origin.substr(0, slash + 1) + path;
          }
          SpeedModel loaded = SpeedModel::load(path);
          sc.models.emplace(first, SpeedModel(first, loaded.points()));
        } else {
          std::istringstream rest(peek + " " + std::string(std::istreambuf_iterator<char>(ls), {}));
          auto points = p.parse_points(rest);
          sc.models.emplace(first, SpeedModel(first, std::move(points)));
        }
      } else if (section == "degradation") {
        int cores_taken = 0;
        std::string mode;
        if (!(ls >> cores_taken >> mode)) p.error("expected <class> <cores_taken> factor|table ...");
        Degradation d;
        if (mode == "factor") {
          d.is_factor = true;
          if (!(ls >> d.factor)) p.error("missing factor value");
        } else if (mode == "table") {
          d.is_factor = false;
          d.model = SpeedModel(first, p.parse_points(ls));
        } else {
          p.error("degradation mode must be factor or table");
        }
        sc.degradation[first][cores_taken] = std::move(d);
      } else if (section == "dataset") {
        if (first == "total") {
          ls >> sc.dataset.total_samples;
          have_total = true;
        } else if (first == "private") {
          std::string node_id;
          std::int64_t count = 0;
          if (!(ls >> node_id >> count)) p.error("expected private <node_id> <count>");
          sc.dataset.private_samples[node_id] += count;
          private_total += count;
        } else {
          p.error("unknown dataset key '" + first + "'");
        }
      } else if (section == "events") {
        WorkloadEvent e;
        e.at_time = std::stod(first);
        if (!(ls >> e.node_id >> e.cores_taken)) p.error("expected <at_time> <node_id> <cores_taken>");
        sc.events.push_back(std::move(e));
      } else if (section == "controller") {
        std::string value;
        if (!(ls >> value)) p.error("missing value for controller key '" + first + "'");
        if (first == "enabled") {
          sc.controller.enabled = parse_on_off(value, p);
        } else if (first == "mode") {
          if (value == "speed") {
            sc.controller.policy.mode = RetunePolicy::Mode::SpeedInterpolation;
          } else if (value == "cpu") {
            sc.controller.policy.mode = RetunePolicy::Mode::CpuProportional;
          } else {
            p.error("mode must be speed or cpu");
          }
        } else if (first == "clamp_low") {
          sc.controller.policy.clamp_low = std::stod(value);
        } else if (first == "clamp_high") {
          sc.controller.policy.clamp_high = std::stod(value);
        } else if (first == "eq3_literal") {
          sc.controller.policy.eq3_literal = parse_on_off(value, p);
        } else if (first == "naive_inverse") {
          sc.controller.policy.naive_inverse = parse_on_off(value, p);
        } else if (first == "index_threshold") {
          sc.controller.monitor.index_threshold = std::stod(value);
        } else if (first == "decline_gate") {
          sc.controller.monitor.decline_gate = std::stod(value);
        } else {
          p.error("unknown controller key '" + first + "'");
        }
      } else if (section == "terminations") {
        ForcedTermination t;
        t.epoch = std::stoi(first);
        if (!(ls >> t.step)) p.error("expected <epoch> <step>");
        sc.forced_terminations.push_back(t);
      } else {
        p.error("unknown section [" + section + "]");
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      p.error(std::string("parse failure: ") + e.what());
    }
  }

  if (!have_total) fail(Errc::ScenarioError, origin + ": dataset total missing");
  sc.dataset.public_samples = sc.dataset.total_samples - private_total;
  if (sc.dataset.public_samples < 0) {
    fail(Errc::ScenarioError, origin + ": private samples exceed the dataset size");
  }
  for (NodeProfile& n : sc.nodes) {
    n.owned_private_samples = sc.dataset.private_count(n.node_id);
  }
  std::stable_sort(sc.events.begin(), sc.events.end(),
                   [](const WorkloadEvent& a, const WorkloadEvent& b) { return a.at_time < b.at_time; });
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ScenarioError, "cannot open scenario file " + path);
  Scenario sc = parse_scenario(in, path);
  if (sc.name.empty()) {
    const auto slash = path.find_last_of('/');
    sc.name = slash == std::string::npos ? path : path.substr(slash + 1);
  }
  return sc;
}

}  // namespace hypertune
