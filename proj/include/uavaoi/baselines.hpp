#pragma once

// Heuristic comparison policies: max-age chasing, nearest-unvisited rounds,
// and uniform random, plus the return-to-destination safety override shared
// by the two heuristics.

#include <algorithm>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "uavaoi/env.hpp"
#include "uavaoi/seeding.hpp"

namespace uavaoi {

enum class BaselineVariant { AoiGreedy, DistanceRound, Random };

struct BaselineConfig {
  double return_time_margin = 0.0;                  // slots
  std::optional<double> return_energy_margin;       // joules; defaults to one hover surcharge
  BaselineVariant variant = BaselineVariant::AoiGreedy;

  double energy_margin(const EpisodeConfig& env) const {
    return return_energy_margin ? *return_energy_margin : hover_surcharge(env.energy);
  }

  void validate() const {
    if (!(return_time_margin >= 0.0)) throw ConfigError("baseline: return_time_margin must be >= 0");
    if (return_energy_margin && !(*return_energy_margin >= 0.0)) {
      throw ConfigError("baseline: return_energy_margin must be >= 0");
    }
  }
};

/// Visited flags for the current traversal round (one per sensor).
struct RoundMemory {
  std::vector<bool> visited;
};

/// One step along the column-first Manhattan path from `from` to `to`.
constexpr Direction step_toward(Cell from, Cell to) {
  if (to.col > from.col) return Direction::East;
  if (to.col < from.col) return Direction::West;
  if (to.row > from.row) return Direction::North;
  if (to.row < from.row) return Direction::South;
  return Direction::Hover;
}

/// Cell closest (Manhattan) to `from` whose center covers `sensor`; ties go to
/// the lowest row-major index. Falls back to the cell nearest the sensor when
/// no cell center is in range.
inline Cell nearest_covering_cell(Cell from, const SensorNode& sensor, const GridSpec& grid,
                                  double radius) {
  std::optional<Cell> best;
  int best_dist = std::numeric_limits<int>::max();
  for (int i = 0; i < grid.num_cells(); ++i) {
    const Cell c = grid.cell_at(i);
    if (!in_coverage(grid.center(c), sensor.position, radius)) continue;
    const int d = manhattan(from, c);
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  if (best) return *best;
  Cell closest = grid.start;
  double closest_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.num_cells(); ++i) {
    const Cell c = grid.cell_at(i);
    const double d = distance(grid.center(c), sensor.position);
    if (d < closest_d) {
      closest_d = d;
      closest = c;
    }
  }
  return closest;
}

/// Covered sensor with the largest current age (lowest id on ties), or 0.
inline int opportunistic_schedule(const SystemState& state, const EpisodeConfig& env, double radius) {
  const Point here = env.grid.center(state.cell);
  int best = 0;
  for (int i = 0; i < env.num_sensors(); ++i) {
    if (!in_coverage(here, env.sensors[static_cast<std::size_t>(i)].position, radius)) continue;
    if (best == 0 || state.ages[static_cast<std::size_t>(i)] > state.ages[static_cast<std::size_t>(best - 1)]) {
      best = i + 1;
    }
  }
  return best;
}

/// True when some continuation from (time slack, energy slack) still ends on
/// time at the stop cell. Slack is burnt by hovering (1 slot, one surcharge)
/// or by detours (2 slots, free), so odd slack needs one affordable hover.
inline bool completion_feasible(int time_slack, double energy_slack, const EpisodeConfig& env) {
  if (time_slack < 0 || energy_slack < 0.0) return false;
  const double surcharge = hover_surcharge(env.energy);
  if (env.grid.num_cells() == 1) return energy_slack >= time_slack * surcharge;
  return time_slack % 2 == 0 || energy_slack >= surcharge;
}

/// Replaces the movement of `proposed` by a step toward the stop cell when
/// either slack is at or below its margin, or when the proposed movement would
/// leave no feasible completion. Scheduling is left unchanged.
inline Action safety_override(const SystemState& state, const Action& proposed,
                              const EpisodeConfig& env, const BaselineConfig& bc) {
  const Cell stop = env.grid.stop;
  auto feasible_after = [&](Direction d) {
    const Cell next = offset(state.cell, d);
    if (!env.grid.contains(next)) return false;
    const int phi = time_slack_step(state.time_slack, state.cell, next, stop);
    const int hovers = state.hovers + (d == Direction::Hover ? 1 : 0);
    return completion_feasible(phi, energy_slack_after_hovers(hovers, env.horizon, env.energy), env);
  };

  const bool low_slack = state.time_slack <= bc.return_time_margin ||
                         state.energy_slack <= bc.energy_margin(env);
  if (!low_slack && feasible_after(proposed.movement)) return proposed;

  Action out = proposed;
  if (state.cell != stop) {
    out.movement = step_toward(state.cell, stop);
    return out;
  }
  // Already home with slots to spare: hover when affordable, else step out and back.
  if (feasible_after(Direction::Hover)) {
    out.movement = Direction::Hover;
    return out;
  }
  for (Direction d : kAllDirections) {
    if (d != Direction::Hover && feasible_after(d)) {
      out.movement = d;
      return out;
    }
  }
  out.movement = Direction::Hover;
  return out;
}

/// Chase the sensor with the largest age (unweighted; lowest id on ties),
/// collecting from whichever covered sensor is stalest on the way.
inline Action aoi_greedy_action(const SystemState& state, const EpisodeConfig& env,
                                const BaselineConfig& bc) {
  const double radius = env.radius();
  std::size_t target = 0;
  for (std::size_t i = 1; i < state.ages.size(); ++i) {
    if (state.ages[i] > state.ages[target]) target = i;
  }
  const Cell goal = nearest_covering_cell(state.cell, env.sensors[target], env.grid, radius);
  const Action proposed{step_toward(state.cell, goal), opportunistic_schedule(state, env, radius)};
  return safety_override(state, proposed, env, bc);
}

/// Visit sensors nearest-first within a round; a sensor counts as visited
/// once its update is collected, and the round restarts when all are visited.
inline std::pair<Action, RoundMemory> distance_round_action(const SystemState& state,
                                                            RoundMemory memory,
                                                            const EpisodeConfig& env,
                                                            const BaselineConfig& bc) {
  const double radius = env.radius();
  const auto n = static_cast<std::size_t>(env.num_sensors());
  memory.visited.resize(n, false);
  if (std::all_of(memory.visited.begin(), memory.visited.end(), [](bool v) { return v; })) {
    memory.visited.assign(n, false);
  }
  const Point here = env.grid.center(state.cell);
  std::size_t target = n;
  double target_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (memory.visited[i]) continue;
    const double d = distance(here, env.sensors[i].position);
    if (d < target_d) {
      target_d = d;
      target = i;
    }
  }
  const Cell goal = nearest_covering_cell(state.cell, env.sensors[target], env.grid, radius);
  const Action proposed{step_toward(state.cell, goal), opportunistic_schedule(state, env, radius)};
  const Action chosen = safety_override(state, proposed, env, bc);
  if (chosen.schedule > 0) memory.visited[static_cast<std::size_t>(chosen.schedule - 1)] = true;
  return {chosen, std::move(memory)};
}

inline Action random_action(const SystemState& state, const EpisodeConfig& env, Rng& rng) {
  const auto actions = valid_actions(state, env);
  return actions[uniform_index(rng, actions.size())];
}

/// Stateful policy closure for rollouts. Round memory and the random stream
/// live inside the closure, so build a fresh policy per episode.
inline Policy make_baseline_policy(const EpisodeConfig& env, const BaselineConfig& bc,
                                   std::uint64_t seed = 0) {
  bc.validate();
  switch (bc.variant) {
    case BaselineVariant::AoiGreedy:
      return [&env, bc](const SystemState& s) { return aoi_greedy_action(s, env, bc); };
    case BaselineVariant::DistanceRound: {
      auto memory = std::make_shared<RoundMemory>();
      return [&env, bc, memory](const SystemState& s) {
        auto [a, next] = distance_round_action(s, std::move(*memory), env, bc);
        *memory = std::move(next);
        return a;
      };
    }
    case BaselineVariant::Random: {
      auto rng = std::make_shared<Rng>(derive_seed(seed, {kStreamPolicy}));
      return [&env, rng](const SystemState& s) { return random_action(s, env, *rng); };
    }
  }
  throw ConfigError("unknown baseline variant");
}

}  // namespace uavaoi
