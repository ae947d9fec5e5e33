#pragma once

// Ready-made episode configurations.

#include <vector>

#include "uavaoi/dqn.hpp"
#include "uavaoi/env.hpp"

namespace uavaoi {

inline std::vector<SensorNode> sensors_at_cells(const GridSpec& grid, const std::vector<Cell>& cells) {
  std::vector<SensorNode> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out.push_back({static_cast<int>(i) + 1, grid.center(cells[i]), 1.0});
  }
  return out;
}

/// 500 m x 500 m area, 20 x 20 cells of 25 m, start (10,0), stop (10,19),
/// T = 70 slots, default link and energy parameters.
inline EpisodeConfig reference_setup(std::vector<SensorNode> sensors) {
  EpisodeConfig c;
  c.grid = GridSpec{};
  c.sensors = std::move(sensors);
  c.horizon = 70;
  c.age_cap = 70;
  return c;
}

/// 4 x 4 grid, two sensors, T = 10, one-cell coverage radius. Small enough
/// for exact backward induction and exhaustive search.
inline EpisodeConfig tiny_reference() {
  EpisodeConfig c;
  c.grid.width = 4;
  c.grid.height = 4;
  c.grid.start = {1, 0};
  c.grid.stop = {2, 3};
  c.sensors = sensors_at_cells(c.grid, {{0, 2}, {3, 1}});
  c.horizon = 10;
  c.age_cap = 10;
  c.link.radius_override = c.grid.cell_length;
  return c;
}

/// 10 x 10 grid used for the radius and sensor-count trend studies:
/// start (5,0), stop (5,9), T = 30. Penalties of 30 keep a violation worse
/// than finishing with any realistic age cost while leaving the age signal
/// visible next to the terminal terms.
inline EpisodeConfig trend_grid(std::vector<SensorNode> sensors, double radius_cells) {
  EpisodeConfig c;
  c.grid.width = 10;
  c.grid.height = 10;
  c.grid.start = {5, 0};
  c.grid.stop = {5, 9};
  c.sensors = std::move(sensors);
  c.horizon = 30;
  c.age_cap = 30;
  c.link.radius_override = radius_cells * c.grid.cell_length;
  c.reward = RewardParams{30.0, 30.0, 30.0};
  return c;
}

/// Training settings for the trend grid: rewards scaled to about unit size,
/// slower epsilon decay, a small exploration floor, a smaller step size and
/// two independent restarts (some seeds never learn to reach the stop cell).
inline TrainConfig trend_training() {
  TrainConfig t;
  t.episodes = 3000;
  t.value_scale = 3.0;
  t.learning_rate = 0.001;
  t.eps_decrement = 2e-5;
  t.eps_min = 0.05;
  t.restarts = 2;
  return t;
}

}  // namespace uavaoi
