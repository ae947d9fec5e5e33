#pragma once

// Experiment orchestration: JSON configuration, seeded sensor deployment,
// sweeps over coverage radius or sensor count, metrics CSV, and aggregation.

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavaoi/baselines.hpp"
#include "uavaoi/dqn.hpp"
#include "uavaoi/env.hpp"
#include "uavaoi/oracle.hpp"

#ifndef UAVAOI_VERSION
#define UAVAOI_VERSION "unknown"
#endif

namespace uavaoi {

using Json = nlohmann::ordered_json;

enum class SweepAxis { None, Radius, SensorCount };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::None: return "none";
    case SweepAxis::Radius: return "radius";
    case SweepAxis::SensorCount: return "sensor_count";
  }
  return "?";
}

inline const std::vector<std::string>& known_policies() {
  static const std::vector<std::string> names{"dqn", "aoi_greedy", "distance_round", "random", "oracle"};
  return names;
}

struct ExperimentSpec {
  std::string experiment_id = "experiment";
  std::uint64_t seed = 1;
  int repetitions = 5;
  int eval_episodes = 1;  // rollouts per (point, repetition) for the random policy

  EpisodeConfig episode;              // grid, energy, link, reward, horizon, age cap
  bool random_placement = true;       // otherwise episode.sensors is used as given
  int sensor_count = 3;               // for random placement
  std::optional<double> radius_cells; // sets link.radius_override = radius_cells * cell_length

  TrainConfig train;
  BaselineConfig baseline;
  std::vector<std::string> policies{"dqn", "aoi_greedy", "distance_round"};

  SweepAxis axis = SweepAxis::None;
  std::vector<double> values;

  void validate() const {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
    if (axis != SweepAxis::None && values.empty()) throw ConfigError("sweep.values must be non-empty");
    if (policies.empty()) throw ConfigError("policies must be non-empty");
    for (const auto& p : policies) {
      if (std::find(known_policies().begin(), known_policies().end(), p) == known_policies().end()) {
        throw ConfigError("unknown policy '" + p + "'");
      }
    }
    if (random_placement && sensor_count < 1) throw ConfigError("sensors.count must be >= 1");
    if (radius_cells && !(*radius_cells >= 0.0)) throw ConfigError("link.radius_cells must be >= 0");
    for (double v : values) {
      if (axis == SweepAxis::SensorCount && (v < 1 || v != static_cast<int>(v))) {
        throw ConfigError("sweep: sensor counts must be positive integers");
      }
      if (axis == SweepAxis::Radius && !(v >= 0.0)) throw ConfigError("sweep: radii must be >= 0");
    }
    if (axis == SweepAxis::SensorCount && !random_placement) {
      throw ConfigError("sweep: sensor_count sweeps need random placement");
    }
    train.validate();
    baseline.validate();
  }
};

// ---------------------------------------------------------------------------
// JSON <-> spec
// ---------------------------------------------------------------------------

namespace detail {

/// Reads known keys from one JSON object and rejects anything else.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: field '" + field(key) + "': " + e.what());
    }
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: field '" + field(key) + "': " + e.what());
    }
  }

  const Json* child(const char* key) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw ConfigError("config: unknown field '" + field(key.c_str()) + "'");
      }
    }
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const Json& obj_;
  std::string path_;
  std::vector<std::string> seen_;
};

inline Cell read_cell(const Json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw ConfigError("config: field '" + field + "' must be [col, row]");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace detail

/// Parses a spec from JSON text. Missing fields keep their defaults; unknown
/// fields are rejected. Syntax errors report the line number.
inline ExperimentSpec parse_spec(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = text.substr(0, std::min<std::size_t>(e.byte, text.size()));
    const auto line = 1 + std::count(upto.begin(), upto.end(), '\n');
    throw ConfigError("config: parse error at line " + std::to_string(line) + ": " + e.what());
  }
  ExperimentSpec spec;
  detail::ObjectReader top(root, "");
  top.get("experiment_id", spec.experiment_id);
  if (const Json* seed = top.child("seed")) {
    if (!seed->is_number_unsigned()) throw ConfigError("config: field 'seed' must be an unsigned integer");
    spec.seed = seed->get<std::uint64_t>();
  }
  top.get("repetitions", spec.repetitions);
  top.get("eval_episodes", spec.eval_episodes);
  top.get("horizon", spec.episode.horizon);
  std::optional<int> age_cap;
  top.get_optional("age_cap", age_cap);
  spec.episode.age_cap = age_cap.value_or(spec.episode.horizon);
  top.get("policies", spec.policies);
  if (const Json* generator = top.child("generator")) (void)generator;  // written into manifests

  if (const Json* g = top.child("grid")) {
    detail::ObjectReader r(*g, "grid");
    auto& grid = spec.episode.grid;
    r.get("width", grid.width);
    r.get("height", grid.height);
    r.get("cell_length", grid.cell_length);
    if (const Json* c = r.child("start")) grid.start = detail::read_cell(*c, "grid.start");
    if (const Json* c = r.child("stop")) grid.stop = detail::read_cell(*c, "grid.stop");
    r.finish();
  }
  if (const Json* s = top.child("sensors")) {
    detail::ObjectReader r(*s, "sensors");
    std::string placement = "random";
    r.get("placement", placement);
    r.get("count", spec.sensor_count);
    if (placement == "random") {
      spec.random_placement = true;
      (void)r.child("nodes");
    } else if (placement == "explicit") {
      spec.random_placement = false;
      const Json* nodes = r.child("nodes");
      if (!nodes || !nodes->is_array()) throw ConfigError("config: 'sensors.nodes' must be an array");
      spec.episode.sensors.clear();
      for (std::size_t i = 0; i < nodes->size(); ++i) {
        detail::ObjectReader n((*nodes)[i], "sensors.nodes[" + std::to_string(i) + "]");
        SensorNode node;
        node.id = static_cast<int>(i) + 1;
        n.get("x", node.position.x);
        n.get("y", node.position.y);
        n.get("weight", node.weight);
        n.finish();
        spec.episode.sensors.push_back(node);
      }
      spec.sensor_count = static_cast<int>(spec.episode.sensors.size());
    } else {
      throw ConfigError("config: field 'sensors.placement' must be 'random' or 'explicit'");
    }
    r.finish();
  }
  if (const Json* e = top.child("energy")) {
    detail::ObjectReader r(*e, "energy");
    auto& en = spec.episode.energy;
    r.get("p0", en.p0);
    r.get("p1", en.p1);
    r.get("u_tip", en.u_tip);
    r.get("v0", en.v0);
    r.get("d0", en.d0);
    r.get("rho", en.rho);
    r.get("s0", en.s0);
    r.get("rotor_area", en.rotor_area);
    r.get("e_max", en.e_max);
    r.get("slot_len", en.slot_len);
    r.get("cruise_speed", en.cruise_speed);
    r.finish();
  }
  if (const Json* l = top.child("link")) {
    detail::ObjectReader r(*l, "link");
    auto& link = spec.episode.link;
    r.get("bandwidth", link.bandwidth);
    r.get("update_size", link.update_size);
    r.get("tx_power", link.tx_power);
    r.get("noise_power", link.noise_power);
    r.get("ref_gain", link.ref_gain);
    r.get("altitude", link.altitude);
    r.get_optional("radius_override", link.radius_override);
    r.get_optional("radius_cells", spec.radius_cells);
    r.finish();
  }
  if (const Json* w = top.child("reward")) {
    detail::ObjectReader r(*w, "reward");
    r.get("k1", spec.episode.reward.k1);
    r.get("k2", spec.episode.reward.k2);
    r.get("k3", spec.episode.reward.k3);
    r.finish();
  }
  if (const Json* t = top.child("train")) {
    detail::ObjectReader r(*t, "train");
    auto& tc = spec.train;
    r.get("episodes", tc.episodes);
    r.get("batch_size", tc.batch_size);
    r.get("replay_capacity", tc.replay_capacity);
    r.get("eps_init", tc.eps_init);
    r.get("eps_decrement", tc.eps_decrement);
    r.get("eps_min", tc.eps_min);
    r.get("target_sync_period", tc.target_sync_period);
    r.get("learning_rate", tc.learning_rate);
    r.get("lr_decay_rate", tc.lr_decay_rate);
    r.get("lr_decay_steps", tc.lr_decay_steps);
    r.get("hidden", tc.hidden);
    r.get("value_scale", tc.value_scale);
    r.get("eval_period", tc.eval_period);
    r.get("restarts", tc.restarts);
    r.finish();
  }
  if (const Json* b = top.child("baseline")) {
    detail::ObjectReader r(*b, "baseline");
    r.get("return_time_margin", spec.baseline.return_time_margin);
    r.get_optional("return_energy_margin", spec.baseline.return_energy_margin);
    r.finish();
  }
  if (const Json* s = top.child("sweep")) {
    detail::ObjectReader r(*s, "sweep");
    std::string axis = "none";
    r.get("axis", axis);
    if (axis == "none") spec.axis = SweepAxis::None;
    else if (axis == "radius") spec.axis = SweepAxis::Radius;
    else if (axis == "sensor_count") spec.axis = SweepAxis::SensorCount;
    else throw ConfigError("config: field 'sweep.axis' must be none, radius or sensor_count");
    r.get("values", spec.values);
    r.finish();
  }
  top.finish();
  spec.validate();
  return spec;
}

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_spec(ss.str());
}

/// Fully resolved spec; parse_spec(to_json(spec)) reproduces `spec`.
inline Json to_json(const ExperimentSpec& spec) {
  const auto& ep = spec.episode;
  Json j;
  j["generator"] = std::string("uavaoi ") + UAVAOI_VERSION;
  j["experiment_id"] = spec.experiment_id;
  j["seed"] = spec.seed;
  j["repetitions"] = spec.repetitions;
  j["eval_episodes"] = spec.eval_episodes;
  j["horizon"] = ep.horizon;
  j["age_cap"] = ep.age_cap;
  j["policies"] = spec.policies;
  j["grid"] = {{"width", ep.grid.width},
               {"height", ep.grid.height},
               {"cell_length", ep.grid.cell_length},
               {"start", {ep.grid.start.col, ep.grid.start.row}},
               {"stop", {ep.grid.stop.col, ep.grid.stop.row}}};
  if (spec.random_placement) {
    j["sensors"] = {{"placement", "random"}, {"count", spec.sensor_count}};
  } else {
    Json nodes = Json::array();
    for (const auto& s : ep.sensors) nodes.push_back({{"x", s.position.x}, {"y", s.position.y}, {"weight", s.weight}});
    j["sensors"] = {{"placement", "explicit"}, {"nodes", nodes}};
  }
  const auto& e = ep.energy;
  j["energy"] = {{"p0", e.p0},         {"p1", e.p1},   {"u_tip", e.u_tip},
                 {"v0", e.v0},         {"d0", e.d0},   {"rho", e.rho},
                 {"s0", e.s0},         {"rotor_area", e.rotor_area},
                 {"e_max", e.e_max},   {"slot_len", e.slot_len},
                 {"cruise_speed", e.cruise_speed}};
  const auto& l = ep.link;
  j["link"] = {{"bandwidth", l.bandwidth},     {"update_size", l.update_size},
               {"tx_power", l.tx_power},       {"noise_power", l.noise_power},
               {"ref_gain", l.ref_gain},       {"altitude", l.altitude},
               {"radius_override", l.radius_override ? Json(*l.radius_override) : Json(nullptr)},
               {"radius_cells", spec.radius_cells ? Json(*spec.radius_cells) : Json(nullptr)}};
  j["reward"] = {{"k1", ep.reward.k1}, {"k2", ep.reward.k2}, {"k3", ep.reward.k3}};
  const auto& t = spec.train;
  j["train"] = {{"episodes", t.episodes},
                {"batch_size", t.batch_size},
                {"replay_capacity", t.replay_capacity},
                {"eps_init", t.eps_init},
                {"eps_decrement", t.eps_decrement},
                {"eps_min", t.eps_min},
                {"target_sync_period", t.target_sync_period},
                {"learning_rate", t.learning_rate},
                {"lr_decay_rate", t.lr_decay_rate},
                {"lr_decay_steps", t.lr_decay_steps},
                {"hidden", t.hidden},
                {"value_scale", t.value_scale},
                {"eval_period", t.eval_period},
                {"restarts", t.restarts}};
  j["baseline"] = {{"return_time_margin", spec.baseline.return_time_margin},
                   {"return_energy_margin", spec.baseline.return_energy_margin
                                                ? Json(*spec.baseline.return_energy_margin)
                                                : Json(nullptr)}};
  j["sweep"] = {{"axis", to_string(spec.axis)}, {"values", spec.values}};
  return j;
}

// ---------------------------------------------------------------------------
// Deployment and per-point configs
// ---------------------------------------------------------------------------

/// `count` distinct cell centers drawn uniformly, excluding start and stop.
/// The draw is a prefix of one seeded permutation, so deployments with fewer
/// sensors are subsets of those with more.
inline std::vector<SensorNode> random_deployment(const GridSpec& grid, int count, std::uint64_t seed) {
  std::vector<Cell> cells;
  for (int i = 0; i < grid.num_cells(); ++i) {
    const Cell c = grid.cell_at(i);
    if (c != grid.start && c != grid.stop) cells.push_back(c);
  }
  if (count > static_cast<int>(cells.size())) {
    throw ConfigError("deployment: " + std::to_string(count) + " sensors do not fit on the grid");
  }
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
    const std::size_t j = i + uniform_index(rng, cells.size() - i);
    std::swap(cells[i], cells[j]);
  }
  std::vector<SensorNode> out;
  for (int i = 0; i < count; ++i) {
    out.push_back({i + 1, grid.center(cells[static_cast<std::size_t>(i)]), 1.0});
  }
  return out;
}

struct SweepPoint {
  std::size_t index = 0;
  std::optional<double> value;  // sweep value, if any
};

inline std::vector<SweepPoint> sweep_points(const ExperimentSpec& spec) {
  if (spec.axis == SweepAxis::None) return {{0, std::nullopt}};
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < spec.values.size(); ++i) out.push_back({i, spec.values[i]});
  return out;
}

inline std::uint64_t repetition_seed(const ExperimentSpec& spec, int repetition) {
  return derive_seed(spec.seed, {kStreamDeploy, static_cast<std::uint64_t>(repetition)});
}

/// Depends on the deployment and the resolved (N, R), not on the sweep
/// position, so the same instance trains identically in every sweep.
inline std::uint64_t training_seed(const ExperimentSpec& spec, const EpisodeConfig& cfg, int repetition) {
  return derive_seed(spec.seed, {kStreamTrain, static_cast<std::uint64_t>(repetition),
                                 static_cast<std::uint64_t>(cfg.num_sensors()),
                                 std::bit_cast<std::uint64_t>(cfg.radius())});
}

inline EpisodeConfig build_config(const ExperimentSpec& spec, const SweepPoint& point, int repetition) {
  EpisodeConfig c = spec.episode;
  int count = spec.sensor_count;
  std::optional<double> radius_cells = spec.radius_cells;
  if (point.value) {
    if (spec.axis == SweepAxis::Radius) radius_cells = *point.value;
    if (spec.axis == SweepAxis::SensorCount) count = static_cast<int>(*point.value);
  }
  if (radius_cells) c.link.radius_override = *radius_cells * c.grid.cell_length;
  if (spec.random_placement) c.sensors = random_deployment(c.grid, count, repetition_seed(spec, repetition));
  c.seed = repetition_seed(spec, repetition);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricsRow {
  std::string experiment_id;
  std::uint64_t seed = 0;
  std::string policy;
  double radius_cells = 0.0;
  int num_sensors = 0;
  int episode = 0;
  double total_return = 0.0;
  double avg_aoi = 0.0;
  std::string terminal_kind;
  double wall_ms = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "experiment_id,seed,policy,R_cells,N,episode,return,avg_aoi,terminal_kind,wall_ms";

/// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string to_csv(const MetricsRow& r) {
  std::string line = r.experiment_id + "," + std::to_string(r.seed) + "," + r.policy + "," +
                     format_number(r.radius_cells) + "," + std::to_string(r.num_sensors) + "," +
                     std::to_string(r.episode) + "," + format_number(r.total_return) + "," +
                     format_number(r.avg_aoi) + "," + r.terminal_kind + "," + format_number(r.wall_ms);
  return line;
}

inline void write_metrics(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) os << to_csv(r) << '\n';
  if (!os) throw Error("failed writing " + path.string());
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
bool parse_field(const std::string& s, T& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

inline std::vector<MetricsRow> read_metrics(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("metrics: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw Error("metrics: unexpected header line");
  std::vector<MetricsRow> rows;
  std::size_t row_number = 1;
  while (std::getline(is, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    MetricsRow r;
    bool ok = f.size() == 10;
    if (ok) {
      r.experiment_id = f[0];
      r.policy = f[2];
      r.terminal_kind = f[8];
      ok = detail::parse_field(f[1], r.seed) && detail::parse_field(f[3], r.radius_cells) &&
           detail::parse_field(f[4], r.num_sensors) && detail::parse_field(f[5], r.episode) &&
           detail::parse_field(f[6], r.total_return) && detail::parse_field(f[7], r.avg_aoi) &&
           detail::parse_field(f[9], r.wall_ms) && !r.policy.empty();
    }
    if (!ok) throw Error("metrics: malformed row " + std::to_string(row_number));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error("metrics: no data rows");
  return rows;
}

inline std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return read_metrics(is);
}

struct AggregateRow {
  std::string policy;
  double radius_cells = 0.0;
  int num_sensors = 0;
  std::size_t count = 0;
  double mean_return = 0.0;
  double mean_avg_aoi = 0.0;
};

/// Mean return and mean J per (policy, R, N), in first-appearance order.
inline std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows) {
  std::vector<AggregateRow> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
      return a.policy == r.policy && a.radius_cells == r.radius_cells && a.num_sensors == r.num_sensors;
    });
    if (it == out.end()) {
      out.push_back({r.policy, r.radius_cells, r.num_sensors, 0, 0.0, 0.0});
      it = std::prev(out.end());
    }
    ++it->count;
    it->mean_return += r.total_return;
    it->mean_avg_aoi += r.avg_aoi;
  }
  for (auto& a : out) {
    a.mean_return /= static_cast<double>(a.count);
    a.mean_avg_aoi /= static_cast<double>(a.count);
  }
  return out;
}

/// Writes aggregate.csv and one series_<policy>.csv per policy with
/// (sweep value, mean J) pairs. The sweep value is N when N varies, else R.
inline std::vector<AggregateRow> summarize(const std::filesystem::path& metrics,
                                           const std::filesystem::path& out_dir) {
  const auto rows = read_metrics(metrics);
  const auto agg = aggregate(rows);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "aggregate.csv", std::ios::binary);
    os << "policy,R_cells,N,count,mean_return,mean_avg_aoi\n";
    for (const auto& a : agg) {
      os << a.policy << ',' << format_number(a.radius_cells) << ',' << a.num_sensors << ',' << a.count
         << ',' << format_number(a.mean_return) << ',' << format_number(a.mean_avg_aoi) << '\n';
    }
  }
  const bool by_n = std::any_of(agg.begin(), agg.end(),
                                [&](const AggregateRow& a) { return a.num_sensors != agg.front().num_sensors; });
  std::vector<std::string> policies;
  for (const auto& a : agg) {
    if (std::find(policies.begin(), policies.end(), a.policy) == policies.end()) policies.push_back(a.policy);
  }
  for (const auto& p : policies) {
    std::ofstream os(out_dir / ("series_" + p + ".csv"), std::ios::binary);
    os << (by_n ? "N" : "R_cells") << ",mean_avg_aoi\n";
    for (const auto& a : agg) {
      if (a.policy != p) continue;
      os << (by_n ? std::to_string(a.num_sensors) : format_number(a.radius_cells)) << ','
         << format_number(a.mean_avg_aoi) << '\n';
    }
  }
  return agg;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct RunOptions {
  std::filesystem::path out_dir = "out";
  bool record_wall_time = false;  // off keeps metrics.csv byte-reproducible
  bool save_checkpoints = true;     // also writes the per-training episode logs
  std::optional<std::filesystem::path> checkpoint;  // evaluate this network instead of training
  bool export_value_tables = false;
  std::function<void(const std::string&)> progress;
};

inline void write_train_log(const std::vector<EpisodeLog>& log, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << "episode,steps,return,avg_aoi,terminal_kind,epsilon,learning_rate,mean_loss\n";
  for (const auto& l : log) {
    os << l.episode << ',' << l.steps << ',' << format_number(l.total_return) << ',' << format_number(l.avg_aoi)
       << ',' << to_string(l.kind) << ',' << format_number(l.epsilon) << ',' << format_number(l.learning_rate)
       << ',' << format_number(l.mean_loss) << '\n';
  }
}

inline BaselineConfig baseline_for(const ExperimentSpec& spec, BaselineVariant v) {
  BaselineConfig b = spec.baseline;
  b.variant = v;
  return b;
}

/// Evaluates every configured policy at every sweep point and repetition.
inline std::vector<MetricsRow> run(const ExperimentSpec& spec, const RunOptions& opt) {
  spec.validate();
  std::filesystem::create_directories(opt.out_dir);
  std::vector<MetricsRow> rows;
  for (const SweepPoint& point : sweep_points(spec)) {
    for (int rep = 0; rep < spec.repetitions; ++rep) {
      const EpisodeConfig cfg = build_config(spec, point, rep);
      const std::uint64_t rep_seed = repetition_seed(spec, rep);
      const double r_cells = cfg.radius() / cfg.grid.cell_length;
      auto emit = [&](const std::string& policy, int episode, const PolicyValue& v, double ms) {
        rows.push_back({spec.experiment_id, rep_seed, policy, r_cells, cfg.num_sensors(), episode,
                        v.total_return, v.avg_aoi, to_string(v.kind), opt.record_wall_time ? ms : 0.0});
      };
      const std::string tag = "p" + std::to_string(point.index) + "_r" + std::to_string(rep);
      for (const auto& policy : spec.policies) {
        const auto t0 = std::chrono::steady_clock::now();
        auto elapsed = [&] {
          return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        };
        if (opt.progress) opt.progress(tag + " " + policy);
        if (policy == "dqn") {
          Network net;
          if (opt.checkpoint) {
            net = load_checkpoint<Real>(opt.checkpoint->string());
            if (net.layer_sizes().front() != cfg.observation_size() ||
                net.layer_sizes().back() != cfg.num_actions()) {
              throw DimensionError("checkpoint does not match the configured sensor count");
            }
          } else {
            TrainConfig tc = spec.train;
            tc.seed = training_seed(spec, cfg, rep);
            TrainResult trained = train(cfg, tc);
            if (opt.save_checkpoints) {
              std::filesystem::create_directories(opt.out_dir / "checkpoints");
              save_checkpoint(trained.net, (opt.out_dir / "checkpoints" / (tag + ".qnet")).string());
              write_train_log(trained.log, opt.out_dir / "checkpoints" / (tag + "_log.csv"));
            }
            net = std::move(trained.net);
          }
          const EpisodeRecord rec = greedy_rollout(net, cfg);
          emit(policy, 0, {rec.total_return, rec.avg_aoi, rec.kind}, elapsed());
        } else if (policy == "aoi_greedy" || policy == "distance_round") {
          const auto variant = policy == "aoi_greedy" ? BaselineVariant::AoiGreedy : BaselineVariant::DistanceRound;
          emit(policy, 0, policy_value(make_baseline_policy(cfg, baseline_for(spec, variant)), cfg), elapsed());
        } else if (policy == "random") {
          for (int e = 0; e < spec.eval_episodes; ++e) {
            const auto seed = derive_seed(rep_seed, {kStreamPolicy, static_cast<std::uint64_t>(cfg.num_sensors()),
                                                   std::bit_cast<std::uint64_t>(cfg.radius()),
                                                   static_cast<std::uint64_t>(e)});
            emit(policy, e, policy_value(make_baseline_policy(cfg, baseline_for(spec, BaselineVariant::Random), seed), cfg),
                 elapsed());
          }
        } else if (policy == "oracle") {
          const ValueTable table = solve(cfg);
          if (opt.export_value_tables) export_value_table(table, (opt.out_dir / (tag + ".vtab")).string());
          const EpisodeRecord rec = optimal_rollout(table, cfg);
          emit(policy, 0, {rec.total_return, rec.avg_aoi, rec.kind}, elapsed());
        }
      }
    }
  }
  return rows;
}

inline void write_manifest(const ExperimentSpec& spec, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << to_json(spec).dump(2) << '\n';
}

/// run() followed by metrics.csv, manifest.json and the summary files.
inline std::vector<MetricsRow> run_sweep(const ExperimentSpec& spec, const RunOptions& opt) {
  const auto rows = run(spec, opt);
  write_metrics(rows, opt.out_dir / "metrics.csv");
  write_manifest(spec, opt.out_dir / "manifest.json");
  summarize(opt.out_dir / "metrics.csv", opt.out_dir);
  return rows;
}

}  // namespace uavaoi
