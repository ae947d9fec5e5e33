#pragma once

// Finite-horizon decision process over the grid world: state assembly,
// action masking, deterministic transitions, and episode accounting.

#include <cassert>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uavaoi/core_model.hpp"

namespace uavaoi {

struct InvalidActionError : Error {
  using Error::Error;
};

struct EpisodeConfig {
  GridSpec grid;
  std::vector<SensorNode> sensors;
  EnergyParams energy;
  LinkParams link;
  RewardParams reward;
  int horizon = 70;
  int age_cap = 70;
  std::uint64_t seed = 0;

  int num_sensors() const { return static_cast<int>(sensors.size()); }
  int num_actions() const { return kNumDirections * (num_sensors() + 1); }
  int observation_size() const { return num_sensors() + 4; }
  double radius() const { return coverage_radius(link, energy.slot_len); }

  void validate() const {
    grid.validate();
    energy.validate(grid);
    link.validate();
    reward.validate();
    if (sensors.empty()) throw ConfigError("config: at least one sensor node is required");
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      const auto& s = sensors[i];
      if (s.id != static_cast<int>(i) + 1) throw ConfigError("config: sensor ids must be 1..N in order");
      if (!(s.weight > 0.0)) throw ConfigError("config: sensor weight must be > 0");
      const double max_x = (grid.width - 1) * grid.cell_length + 0.5 * grid.cell_length;
      const double max_y = (grid.height - 1) * grid.cell_length + 0.5 * grid.cell_length;
      const double min_c = -0.5 * grid.cell_length;
      if (s.position.x < min_c || s.position.y < min_c || s.position.x > max_x ||
          s.position.y > max_y) {
        throw ConfigError("config: sensor " + std::to_string(s.id) + " lies outside the grid region");
      }
    }
    if (energy.e_max + horizon * propulsion_power(0.0, energy) * energy.slot_len >= kEnergyLimit) {
      throw ConfigError("config: energy budget and horizon exceed the 4.19 MJ bookkeeping range");
    }
    if (horizon < 1 + manhattan(grid.start, grid.stop)) {
      throw ConfigError("config: horizon T=" + std::to_string(horizon) +
                        " is shorter than 1 + manhattan(start, stop)=" +
                        std::to_string(1 + manhattan(grid.start, grid.stop)));
    }
    if (age_cap < 1) throw ConfigError("config: age_cap must be >= 1");
    (void)radius();  // throws InfeasibleLinkError
  }
};

struct Action {
  Direction movement = Direction::Hover;
  int schedule = 0;  // 0 = nobody, else 1-based sensor id
  friend bool operator==(const Action&, const Action&) = default;
};

inline int action_index(const Action& a, int num_sensors) {
  return static_cast<int>(a.movement) * (num_sensors + 1) + a.schedule;
}

inline Action action_from_index(int index, int num_sensors) {
  return {static_cast<Direction>(index / (num_sensors + 1)), index % (num_sensors + 1)};
}

struct SystemState {
  Cell cell;
  AoIVector ages;
  int time_slack = 0;
  double energy_slack = 0.0;
  int slot = 1;
  int hovers = 0;  // slots spent hovering so far; determines energy_slack
  friend bool operator==(const SystemState&, const SystemState&) = default;
};

struct StepOutcome {
  SystemState next;
  double reward = 0.0;
  bool terminal = false;
  TerminalKind kind = TerminalKind::Running;
};

inline SystemState reset(const EpisodeConfig& config) {
  config.validate();
  SystemState s;
  s.cell = config.grid.start;
  s.ages = AoIVector::fresh(config.sensors.size(), config.age_cap);
  s.slot = 1;
  s.hovers = 0;
  s.time_slack = time_slack(s.cell, 1, config.horizon, config.grid);
  s.energy_slack = initial_energy_slack(config.horizon, config.energy);
  return s;
}

inline bool movement_allowed(Cell cell, Direction d, const GridSpec& grid) {
  return grid.contains(offset(cell, d));
}

/// Boolean mask over the joint action index space.
inline std::vector<bool> action_mask(const SystemState& state, const EpisodeConfig& config) {
  const int per_move = config.num_sensors() + 1;
  std::vector<bool> mask(static_cast<std::size_t>(config.num_actions()), false);
  for (Direction d : kAllDirections) {
    if (!movement_allowed(state.cell, d, config.grid)) continue;
    const int base = static_cast<int>(d) * per_move;
    for (int s = 0; s < per_move; ++s) mask[static_cast<std::size_t>(base + s)] = true;
  }
  return mask;
}

inline std::vector<Action> valid_actions(const SystemState& state, const EpisodeConfig& config) {
  std::vector<Action> out;
  for (Direction d : kAllDirections) {
    if (!movement_allowed(state.cell, d, config.grid)) continue;
    for (int s = 0; s <= config.num_sensors(); ++s) out.push_back({d, s});
  }
  return out;
}

/// Transition with a precomputed coverage radius (hot path for search and training).
inline StepOutcome step(const SystemState& state, const Action& action,
                        const EpisodeConfig& config, double radius) {
  if (state.slot >= config.horizon) {
    throw InvalidActionError("step: no decision epoch at slot " + std::to_string(state.slot));
  }
  if (action.schedule < 0 || action.schedule > config.num_sensors()) {
    throw InvalidActionError("step: schedule index " + std::to_string(action.schedule) +
                             " out of range");
  }
  if (!movement_allowed(state.cell, action.movement, config.grid)) {
    throw InvalidActionError(std::string("step: movement ") + to_string(action.movement) +
                             " is masked at this cell");
  }

  StepOutcome out;
  SystemState& next = out.next;
  // Collection happens from the cell the UAV occupies while deciding.
  next.cell = move(state.cell, action.movement, config.grid);
  next.ages = aoi_step(state.ages, action.schedule, config.grid.center(state.cell),
                       config.sensors, radius);
  next.slot = state.slot + 1;
  next.time_slack = time_slack_step(state.time_slack, state.cell, next.cell, config.grid.stop);
  next.hovers = state.hovers + (action.movement == Direction::Hover ? 1 : 0);
  next.energy_slack = energy_slack_after_hovers(next.hovers, config.horizon, config.energy);
  assert(next.time_slack == time_slack(next.cell, next.slot, config.horizon, config.grid));

  if (next.time_slack < 0) {
    out.kind = TerminalKind::TimeViolation;
  } else if (next.energy_slack < 0.0) {
    out.kind = TerminalKind::EnergyViolation;
  } else if (next.slot == config.horizon && next.cell == config.grid.stop) {
    out.kind = TerminalKind::Success;
  }
  out.terminal = out.kind != TerminalKind::Running;
  out.reward = step_reward(next.ages, config.sensors, config.horizon, out.kind, config.reward);
  return out;
}

inline StepOutcome step(const SystemState& state, const Action& action,
                        const EpisodeConfig& config) {
  return step(state, action, config, config.radius());
}

/// Network input: [col/(W-1), row/(H-1), ages/cap..., phi/T, Delta/E_max].
template <typename Scalar = double>
std::vector<Scalar> encode_observation(const SystemState& state, const EpisodeConfig& config) {
  std::vector<Scalar> obs;
  obs.reserve(static_cast<std::size_t>(config.observation_size()));
  const auto& g = config.grid;
  obs.push_back(g.width > 1 ? static_cast<Scalar>(state.cell.col) / static_cast<Scalar>(g.width - 1)
                            : Scalar(0));
  obs.push_back(g.height > 1 ? static_cast<Scalar>(state.cell.row) / static_cast<Scalar>(g.height - 1)
                             : Scalar(0));
  for (int age : state.ages.ages) {
    obs.push_back(static_cast<Scalar>(age) / static_cast<Scalar>(state.ages.cap));
  }
  obs.push_back(static_cast<Scalar>(state.time_slack) / static_cast<Scalar>(config.horizon));
  obs.push_back(static_cast<Scalar>(state.energy_slack / config.energy.e_max));
  return obs;
}

struct EpisodeRecord {
  std::vector<SystemState> states;  // s_1 .. s_last, one more than actions
  std::vector<Action> actions;
  std::vector<double> rewards;
  TerminalKind kind = TerminalKind::Running;
  double total_return = 0.0;  // G
  double avg_aoi = 0.0;       // J
};

/// G = r_1 + (r_2 + (... + r_n)), accumulated back to front like a
/// backward-induction value so both agree bit for bit.
inline double episode_return(const std::vector<double>& rewards) {
  double g = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) g = it == rewards.rbegin() ? *it : *it + g;
  return g;
}

using Policy = std::function<Action(const SystemState&)>;

/// (1/T) * sum over visited slots of the weighted ages.
inline double weighted_average_aoi(const std::vector<SystemState>& states,
                                   const EpisodeConfig& config) {
  double sum = 0.0;
  for (const auto& s : states) {
    for (std::size_t i = 0; i < s.ages.size(); ++i) sum += config.sensors[i].weight * s.ages[i];
  }
  return sum / config.horizon;
}

inline EpisodeRecord rollout(const Policy& policy, const EpisodeConfig& config) {
  const double radius = config.radius();
  EpisodeRecord rec;
  rec.states.push_back(reset(config));
  if (config.horizon == 1) {
    // start == stop and no decision epoch: the trajectory is already complete.
    rec.kind = TerminalKind::Success;
    rec.avg_aoi = weighted_average_aoi(rec.states, config);
    return rec;
  }
  while (true) {
    const SystemState& s = rec.states.back();
    const Action a = policy(s);
    StepOutcome o = step(s, a, config, radius);
    rec.actions.push_back(a);
    rec.rewards.push_back(o.reward);
    rec.states.push_back(std::move(o.next));
    if (o.terminal) {
      rec.kind = o.kind;
      break;
    }
  }
  rec.total_return = episode_return(rec.rewards);
  rec.avg_aoi = weighted_average_aoi(rec.states, config);
  return rec;
}

}  // namespace uavaoi
