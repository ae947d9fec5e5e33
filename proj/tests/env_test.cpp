#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "uavaoi/env.hpp"
#include "uavaoi/presets.hpp"

namespace uavaoi {
namespace {

EpisodeConfig table_config() {
  const GridSpec grid;
  return reference_setup(sensors_at_cells(grid, {{3, 4}, {15, 10}, {8, 17}}));
}

TEST(Reset, ReferenceSetup) {
  const auto cfg = table_config();
  const SystemState s = reset(cfg);
  EXPECT_EQ(s.cell, (Cell{10, 0}));
  EXPECT_EQ(s.slot, 1);
  EXPECT_EQ(s.time_slack, 50);
  EXPECT_NEAR(s.energy_slack, 22000.0 - 69 * 112.8758628, 1e-6);
  EXPECT_NEAR(s.energy_slack, 14211.5654668, 1e-6);
  EXPECT_EQ(s.ages.ages, (std::vector<int>{1, 1, 1}));
}

TEST(Reset, RejectsInvalidConfigs) {
  auto cfg = table_config();
  cfg.horizon = 19;  // needs 20
  EXPECT_THROW(reset(cfg), ConfigError);
  cfg = table_config();
  cfg.sensors.clear();
  EXPECT_THROW(reset(cfg), ConfigError);
  cfg = table_config();
  cfg.link.tx_power = 0.01;
  EXPECT_THROW(reset(cfg), InfeasibleLinkError);
  cfg = table_config();
  cfg.sensors[1].weight = 0.0;
  EXPECT_THROW(reset(cfg), ConfigError);
}

std::vector<Direction> movements(const std::vector<Action>& actions) {
  std::vector<Direction> out;
  for (const auto& a : actions) {
    if (std::find(out.begin(), out.end(), a.movement) == out.end()) out.push_back(a.movement);
  }
  return out;
}

TEST(ValidActions, CornersAndInterior) {
  const auto cfg = table_config();
  SystemState s = reset(cfg);
  s.cell = {0, 0};
  auto acts = valid_actions(s, cfg);
  EXPECT_EQ(movements(acts), (std::vector<Direction>{Direction::North, Direction::East, Direction::Hover}));
  EXPECT_EQ(acts.size(), 3u * 4u);

  s.cell = {19, 19};
  acts = valid_actions(s, cfg);
  EXPECT_EQ(movements(acts), (std::vector<Direction>{Direction::South, Direction::West, Direction::Hover}));

  s.cell = {7, 7};
  EXPECT_EQ(valid_actions(s, cfg).size(), 20u);
  const auto mask = action_mask(s, cfg);
  EXPECT_EQ(std::count(mask.begin(), mask.end(), true), 20);
}

TEST(ActionIndex, RoundTrip) {
  for (int n = 1; n < 6; ++n) {
    for (int i = 0; i < 5 * (n + 1); ++i) EXPECT_EQ(action_index(action_from_index(i, n), n), i);
  }
}

TEST(Step, ArrivalOnTimeIsSuccess) {
  auto cfg = table_config();
  SystemState s = reset(cfg);
  s.cell = {10, 18};
  s.slot = 69;
  s.time_slack = time_slack(s.cell, s.slot, cfg.horizon, cfg.grid);
  ASSERT_EQ(s.time_slack, 0);
  const StepOutcome o = step(s, {Direction::North, 0}, cfg);
  EXPECT_TRUE(o.terminal);
  EXPECT_EQ(o.kind, TerminalKind::Success);
  EXPECT_NEAR(o.reward, -weighted_age_cost(o.next.ages, cfg.sensors, cfg.horizon) + 100.0, 1e-12);
}

TEST(Step, HoverWithoutSlackIsTimeViolation) {
  auto cfg = table_config();
  SystemState s = reset(cfg);
  s.cell = {10, 5};
  s.slot = 70 - 14;
  s.time_slack = time_slack(s.cell, s.slot, cfg.horizon, cfg.grid);
  ASSERT_EQ(s.time_slack, 0);
  const StepOutcome o = step(s, {Direction::Hover, 0}, cfg);
  EXPECT_EQ(o.next.time_slack, -1);
  EXPECT_EQ(o.kind, TerminalKind::TimeViolation);
  EXPECT_NEAR(o.reward, -weighted_age_cost(o.next.ages, cfg.sensors, cfg.horizon) - 100.0, 1e-12);
}

TEST(Step, SchedulingCoveredSensorResetsItsAge) {
  auto cfg = table_config();
  cfg.link.radius_override = 30.0;
  SystemState s = reset(cfg);
  s.cell = {3, 4};  // sensor 1 sits here
  s.ages.ages = {9, 9, 9};
  const StepOutcome o = step(s, {Direction::North, 1}, cfg);
  EXPECT_EQ(o.next.ages.ages, (std::vector<int>{1, 10, 10}));
  EXPECT_EQ(o.kind, TerminalKind::Running);
}

TEST(Step, MaskedActionThrows) {
  const auto cfg = table_config();
  const SystemState s = reset(cfg);  // (10,0): South leaves the grid
  EXPECT_THROW(step(s, {Direction::South, 0}, cfg), InvalidActionError);
  EXPECT_THROW(step(s, {Direction::North, 7}, cfg), InvalidActionError);
}

TEST(Step, EnergyViolationOnReducedBudget) {
  auto cfg = table_config();
  cfg.energy.e_max = 9000.0;
  SystemState s = reset(cfg);
  // 1211.57 J of slack, 106.94 J per hover: the 12th hover goes negative.
  int hovers = 0;
  StepOutcome o;
  do {
    o = step(s, {Direction::Hover, 0}, cfg);
    s = o.next;
    ++hovers;
  } while (!o.terminal);
  EXPECT_EQ(hovers, 12);
  EXPECT_EQ(o.kind, TerminalKind::EnergyViolation);
  EXPECT_NEAR(o.reward, -weighted_age_cost(o.next.ages, cfg.sensors, cfg.horizon) - 100.0, 1e-12);
}

TEST(Observation, Layout) {
  const auto cfg = table_config();
  SystemState s = reset(cfg);
  const auto obs = encode_observation(s, cfg);
  ASSERT_EQ(obs.size(), 7u);
  EXPECT_DOUBLE_EQ(obs[0], 10.0 / 19.0);
  EXPECT_DOUBLE_EQ(obs[1], 0.0);
  for (int i = 2; i < 5; ++i) EXPECT_DOUBLE_EQ(obs[static_cast<std::size_t>(i)], 1.0 / 70.0);
  EXPECT_DOUBLE_EQ(obs[5], 50.0 / 70.0);
  EXPECT_DOUBLE_EQ(obs[6], s.energy_slack / 22000.0);

  s.cell = {19, 19};
  s.ages.ages[1] = 70;
  const auto far = encode_observation(s, cfg);
  EXPECT_DOUBLE_EQ(far[0], 1.0);
  EXPECT_DOUBLE_EQ(far[1], 1.0);
  EXPECT_DOUBLE_EQ(far[3], 1.0);
}

Policy straight_to_stop(const EpisodeConfig& cfg) {
  return [&cfg](const SystemState& s) {
    const Cell stop = cfg.grid.stop;
    Direction d = Direction::Hover;
    if (stop.col > s.cell.col) d = Direction::East;
    else if (stop.col < s.cell.col) d = Direction::West;
    else if (stop.row > s.cell.row) d = Direction::North;
    else if (stop.row < s.cell.row) d = Direction::South;
    return Action{d, 0};
  };
}

TEST(Rollout, NoSchedulingGivesTriangularAverage) {
  auto cfg = table_config();
  cfg.sensors.resize(1);
  cfg.horizon = 20;
  cfg.age_cap = 20;
  const auto rec = rollout(straight_to_stop(cfg), cfg);
  EXPECT_EQ(rec.kind, TerminalKind::Success);
  EXPECT_EQ(rec.actions.size(), 19u);
  double expected = 0.0;
  for (int t = 1; t <= 20; ++t) expected += t;
  EXPECT_NEAR(rec.avg_aoi, expected / 20.0, 1e-12);
}

TEST(Rollout, ReturnTelescopesToAverageAge) {
  const auto cfg = tiny_reference();
  std::mt19937_64 rng(5);
  int successes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Random walk that respects the deadline, scheduling at random.
    const auto rec = rollout(
        [&](const SystemState& s) {
          std::vector<Action> ok;
          for (const auto& a : valid_actions(s, cfg)) {
            if (time_slack_step(s.time_slack, s.cell, offset(s.cell, a.movement), cfg.grid.stop) >= 0) {
              ok.push_back(a);
            }
          }
          return ok[rng() % ok.size()];
        },
        cfg);
    ASSERT_EQ(rec.kind, TerminalKind::Success);
    ++successes;
    double initial = 0.0;
    for (const auto& sn : cfg.sensors) initial += sn.weight;
    // G = -(J*T - sum theta * delta_1)/T + k3
    const double expected = -(rec.avg_aoi * cfg.horizon - initial) / cfg.horizon + cfg.reward.k3;
    EXPECT_NEAR(rec.total_return, expected, 1e-10);
  }
  EXPECT_EQ(successes, 200);
}

TEST(Rollout, EarlyTerminationOnDeadlineMiss) {
  const auto cfg = tiny_reference();
  const auto rec = rollout([](const SystemState&) { return Action{Direction::Hover, 0}; }, cfg);
  EXPECT_EQ(rec.kind, TerminalKind::TimeViolation);
  EXPECT_LT(rec.actions.size(), static_cast<std::size_t>(cfg.horizon - 1));
}

TEST(Rollout, InvariantsAlongRandomTrajectories) {
  const auto cfg = table_config();
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rec = rollout(
        [&](const SystemState& s) {
          const auto acts = valid_actions(s, cfg);
          return acts[rng() % acts.size()];
        },
        cfg);
    EXPECT_LE(rec.actions.size(), static_cast<std::size_t>(cfg.horizon - 1));
    EXPECT_NE(rec.kind, TerminalKind::Running);
    int hovers = 0;
    for (std::size_t i = 0; i < rec.states.size(); ++i) {
      const auto& s = rec.states[i];
      EXPECT_TRUE(cfg.grid.contains(s.cell));
      EXPECT_LE(s.slot, cfg.horizon);
      EXPECT_EQ(s.time_slack, time_slack(s.cell, s.slot, cfg.horizon, cfg.grid));
      EXPECT_EQ(s.energy_slack, energy_slack_after_hovers(hovers, cfg.horizon, cfg.energy));
      if (i < rec.actions.size() && rec.actions[i].movement == Direction::Hover) ++hovers;
    }
  }
}

TEST(Rollout, Deterministic) {
  const auto cfg = table_config();
  auto make = [&cfg] {
    auto rng = std::make_shared<std::mt19937_64>(42);
    return Policy([&cfg, rng](const SystemState& s) {
      const auto acts = valid_actions(s, cfg);
      return acts[(*rng)() % acts.size()];
    });
  };
  const auto a = rollout(make(), cfg);
  const auto b = rollout(make(), cfg);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.rewards, b.rewards);
  EXPECT_EQ(a.total_return, b.total_return);
}

}  // namespace
}  // namespace uavaoi
