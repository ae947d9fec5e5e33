#pragma once

// Exact finite-horizon optimum by backward induction over every reachable
// state of the deterministic process. Only practical on tiny grids.
//
// Energy slack is an affine function of the number of hover slots, so a
// decision state is fully described by (slot, cell, hover count, ages).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uavaoi/binary_io.hpp"
#include "uavaoi/env.hpp"

namespace uavaoi {

struct StateSpaceTooLargeError : Error {
  using Error::Error;
};

struct MissingStateError : Error {
  using Error::Error;
};

struct SolveLimits {
  double max_states = 5e7;
};

/// Upper bound on the number of distinct decision states.
inline double estimated_state_count(const EpisodeConfig& env) {
  const double age_levels = std::min(env.age_cap, env.horizon);
  double count = static_cast<double>(env.grid.num_cells()) * env.horizon * env.horizon;
  for (int i = 0; i < env.num_sensors(); ++i) count *= age_levels;
  return count;
}

/// Mixed-radix key of a decision state within its slot layer.
class StateCodec {
 public:
  StateCodec() = default;
  explicit StateCodec(const EpisodeConfig& env)
      : grid_(env.grid),
        energy_(env.energy),
        horizon_(env.horizon),
        age_cap_(env.age_cap),
        num_sensors_(env.num_sensors()),
        radix_(static_cast<std::uint64_t>(std::min(env.age_cap, env.horizon))) {}

  std::uint64_t encode(const SystemState& s) const {
    std::uint64_t k = static_cast<std::uint64_t>(s.hovers);
    k = k * static_cast<std::uint64_t>(grid_.num_cells()) + static_cast<std::uint64_t>(grid_.index(s.cell));
    for (std::size_t i = 0; i < s.ages.size(); ++i) k = k * radix_ + static_cast<std::uint64_t>(s.ages[i] - 1);
    return k;
  }

  SystemState decode(std::uint64_t key, int slot) const {
    SystemState s;
    s.ages = AoIVector::fresh(static_cast<std::size_t>(num_sensors_), age_cap_);
    for (std::size_t i = static_cast<std::size_t>(num_sensors_); i-- > 0;) {
      s.ages.ages[i] = static_cast<int>(key % radix_) + 1;
      key /= radix_;
    }
    const auto cells = static_cast<std::uint64_t>(grid_.num_cells());
    s.cell = grid_.cell_at(static_cast<int>(key % cells));
    s.hovers = static_cast<int>(key / cells);
    s.slot = slot;
    s.time_slack = time_slack(s.cell, slot, horizon_, grid_);
    s.energy_slack = energy_slack_after_hovers(s.hovers, horizon_, energy_);
    return s;
  }

 private:
  GridSpec grid_;
  EnergyParams energy_;
  int horizon_ = 0;
  int age_cap_ = 1;
  int num_sensors_ = 0;
  std::uint64_t radix_ = 1;
};

class ValueTable {
 public:
  struct Entry {
    double value = 0.0;  // optimal return from this state onward
    int action = -1;     // joint action index achieving it
  };
  using Layer = std::unordered_map<std::uint64_t, Entry>;

  ValueTable() = default;
  ValueTable(const EpisodeConfig& env, std::vector<Layer> layers)
      : codec_(env), num_sensors_(env.num_sensors()), horizon_(env.horizon), layers_(std::move(layers)) {}

  const Entry* find(const SystemState& s) const {
    if (s.slot < 1 || s.slot >= static_cast<int>(layers_.size())) return nullptr;
    const auto& layer = layers_[static_cast<std::size_t>(s.slot)];
    const auto it = layer.find(codec_.encode(s));
    return it == layer.end() ? nullptr : &it->second;
  }

  const Entry& at(const SystemState& s) const {
    const Entry* e = find(s);
    if (!e) {
      throw MissingStateError("value table has no entry for slot " + std::to_string(s.slot) +
                              " at cell (" + std::to_string(s.cell.col) + "," +
                              std::to_string(s.cell.row) + "); table and config disagree");
    }
    return *e;
  }

  Action best_action(const SystemState& s) const {
    return action_from_index(at(s).action, num_sensors_);
  }

  double root_value() const {
    if (layers_.size() < 2 || layers_[1].empty()) return 0.0;
    return layers_[1].begin()->second.value;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.size();
    return n;
  }

  int horizon() const { return horizon_; }
  int num_sensors() const { return num_sensors_; }
  const StateCodec& codec() const { return codec_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  StateCodec codec_;
  int num_sensors_ = 0;
  int horizon_ = 0;
  std::vector<Layer> layers_;  // indexed by slot; layers_[0] unused
};

/// Backward induction over all states reachable from reset(env).
inline ValueTable solve(const EpisodeConfig& env, const SolveLimits& limits = {}) {
  env.validate();
  const double estimate = estimated_state_count(env);
  if (estimate > limits.max_states) {
    throw StateSpaceTooLargeError("oracle: estimated " + std::to_string(static_cast<long long>(estimate)) +
                                  " states exceeds the limit of " +
                                  std::to_string(static_cast<long long>(limits.max_states)));
  }
  const StateCodec codec(env);
  const double radius = env.radius();
  const int horizon = env.horizon;
  std::vector<ValueTable::Layer> layers(static_cast<std::size_t>(std::max(horizon, 2)));
  if (horizon == 1) return ValueTable(env, std::move(layers));

  // Forward sweep: enumerate reachable decision states slot by slot.
  const SystemState root = reset(env);
  layers[1].emplace(codec.encode(root), ValueTable::Entry{});
  for (int t = 1; t + 1 < horizon; ++t) {
    auto& next_layer = layers[static_cast<std::size_t>(t + 1)];
    for (const auto& [key, entry] : layers[static_cast<std::size_t>(t)]) {
      const SystemState s = codec.decode(key, t);
      for (Direction d : kAllDirections) {
        if (!movement_allowed(s.cell, d, env.grid)) continue;
        for (int b = 0; b <= env.num_sensors(); ++b) {
          const StepOutcome o = step(s, {d, b}, env, radius);
          if (!o.terminal) next_layer.emplace(codec.encode(o.next), ValueTable::Entry{});
        }
      }
    }
  }

  // Backward sweep. Slot T-1 successors are always terminal.
  for (int t = horizon - 1; t >= 1; --t) {
    auto& layer = layers[static_cast<std::size_t>(t)];
    const auto* next_layer = t + 1 < horizon ? &layers[static_cast<std::size_t>(t + 1)] : nullptr;
    for (auto& [key, entry] : layer) {
      const SystemState s = codec.decode(key, t);
      double best = -std::numeric_limits<double>::infinity();
      int best_action = -1;
      for (Direction d : kAllDirections) {
        if (!movement_allowed(s.cell, d, env.grid)) continue;
        for (int b = 0; b <= env.num_sensors(); ++b) {
          const Action a{d, b};
          const StepOutcome o = step(s, a, env, radius);
          double v = o.reward;
          if (!o.terminal) v += next_layer->at(codec.encode(o.next)).value;
          if (v > best) {
            best = v;
            best_action = action_index(a, env.num_sensors());
          }
        }
      }
      entry = {best, best_action};
    }
  }
  return ValueTable(env, std::move(layers));
}

inline EpisodeRecord optimal_rollout(const ValueTable& table, const EpisodeConfig& env) {
  return rollout([&](const SystemState& s) { return table.best_action(s); }, env);
}

struct PolicyValue {
  double total_return = 0.0;
  double avg_aoi = 0.0;
  TerminalKind kind = TerminalKind::Running;
};

/// The process is deterministic, so one rollout gives the exact value.
inline PolicyValue policy_value(const Policy& policy, const EpisodeConfig& env) {
  const EpisodeRecord rec = rollout(policy, env);
  return {rec.total_return, rec.avg_aoi, rec.kind};
}

// Value table export, little-endian:
//   bytes 0..7  magic "UAVVTAB1"
//   u32 version (1), u32 N sensors, u32 horizon T, u64 entry count
//   entries sorted by (slot, key):
//     u32 slot, u32 col, u32 row, u32 hovers, u32 x N ages, f64 value, u32 action
inline constexpr char kValueTableMagic[8] = {'U', 'A', 'V', 'V', 'T', 'A', 'B', '1'};

inline void export_value_table(const ValueTable& table, std::ostream& os) {
  os.write(kValueTableMagic, sizeof(kValueTableMagic));
  detail::write_le<std::uint32_t>(os, 1);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(table.num_sensors()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(table.horizon()));
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(table.size()));
  for (std::size_t t = 0; t < table.layers().size(); ++t) {
    std::vector<std::pair<std::uint64_t, ValueTable::Entry>> rows(table.layers()[t].begin(),
                                                                  table.layers()[t].end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [key, entry] : rows) {
      const SystemState s = table.codec().decode(key, static_cast<int>(t));
      detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t));
      detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.cell.col));
      detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.cell.row));
      detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.hovers));
      for (int age : s.ages.ages) detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(age));
      detail::write_le<double>(os, entry.value);
      detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(entry.action));
    }
  }
  if (!os) throw Error("value table export failed");
}

inline void export_value_table(const ValueTable& table, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  export_value_table(table, os);
}

}  // namespace uavaoi
