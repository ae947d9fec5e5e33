#pragma once

// Closed-form physics and age-of-information bookkeeping for a single UAV
// collecting status updates from ground sensors on a square cell grid.
//
// Everything in this header is a pure function over value types.

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uavaoi {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct InfeasibleLinkError : Error {
  using Error::Error;
};

struct OutOfBoundsError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct Cell {
  int col = 0;
  int row = 0;
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

constexpr int manhattan(Cell a, Cell b) {
  const int dc = a.col - b.col;
  const int dr = a.row - b.row;
  return (dc < 0 ? -dc : dc) + (dr < 0 ? -dr : dr);
}

enum class Direction : std::uint8_t { North = 0, South, East, West, Hover };

inline constexpr int kNumDirections = 5;
inline constexpr Direction kAllDirections[kNumDirections] = {
    Direction::North, Direction::South, Direction::East, Direction::West, Direction::Hover};

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::North: return "North";
    case Direction::South: return "South";
    case Direction::East: return "East";
    case Direction::West: return "West";
    case Direction::Hover: return "Hover";
  }
  return "?";
}

constexpr Cell offset(Cell c, Direction d) {
  switch (d) {
    case Direction::North: return {c.col, c.row + 1};
    case Direction::South: return {c.col, c.row - 1};
    case Direction::East: return {c.col + 1, c.row};
    case Direction::West: return {c.col - 1, c.row};
    case Direction::Hover: return c;
  }
  return c;
}

/// Square-cell grid. Cell (col,row) has its center at (col*L, row*L) meters,
/// so the lower-left cell center is the origin.
struct GridSpec {
  int width = 20;
  int height = 20;
  double cell_length = 25.0;
  Cell start{10, 0};
  Cell stop{10, 19};

  constexpr bool contains(Cell c) const {
    return c.col >= 0 && c.row >= 0 && c.col < width && c.row < height;
  }
  constexpr int num_cells() const { return width * height; }
  constexpr int index(Cell c) const { return c.row * width + c.col; }
  constexpr Cell cell_at(int index) const { return {index % width, index / width}; }
  Point center(Cell c) const { return {c.col * cell_length, c.row * cell_length}; }

  void validate() const {
    if (width < 1 || height < 1) throw ConfigError("grid: width and height must be >= 1");
    if (!(cell_length > 0.0)) throw ConfigError("grid: cell_length must be > 0");
    if (!contains(start)) throw ConfigError("grid: start_cell outside grid bounds");
    if (!contains(stop)) throw ConfigError("grid: stop_cell outside grid bounds");
  }
};

struct SensorNode {
  int id = 1;  // 1-based; schedule index 0 means "nobody transmits"
  Point position;
  double weight = 1.0;
};

/// Rotary-wing propulsion model parameters plus the energy budget and slot
/// timing. Defaults are the system-parameter table of the reference setup.
struct EnergyParams {
  double p0 = 99.66;        // blade profile power [W]
  double p1 = 120.16;       // induced power in hover [W]
  double u_tip = 120.0;     // rotor tip speed [m/s]
  double v0 = 0.002;        // mean rotor induced velocity in hover [m/s]
  double d0 = 0.48;         // fuselage drag ratio
  double rho = 1.225;       // air density [kg/m^3]
  double s0 = 0.0001;       // rotor solidity
  double rotor_area = 0.5;  // rotor disk area [m^2]
  double e_max = 2.2e4;     // on-board energy [J]
  double slot_len = 1.0;    // tau [s]
  double cruise_speed = 25.0;  // V [m/s]

  void validate(const GridSpec& grid) const {
    for (double v : {p0, p1, u_tip, v0, d0, rho, s0, rotor_area, e_max, slot_len, cruise_speed}) {
      if (!(v > 0.0)) throw ConfigError("energy: all parameters must be strictly positive");
    }
    const double per_slot = cruise_speed * slot_len;
    if (std::abs(per_slot - grid.cell_length) > 1e-9 * grid.cell_length) {
      throw ConfigError("energy: cruise_speed * slot_len must equal grid cell_length");
    }
  }
};

/// Line-of-sight link budget. Defaults: B = 1 MHz, M = 5 Mbit,
/// sigma^2 = -100 dBm, beta0 = -60 dB, h = 120 m.
struct LinkParams {
  double bandwidth = 1e6;
  double update_size = 5e6;
  double tx_power = 7.564e-2;
  double noise_power = 1e-13;
  double ref_gain = 1e-6;
  double altitude = 120.0;
  std::optional<double> radius_override;

  void validate() const {
    for (double v : {bandwidth, update_size, tx_power, noise_power, ref_gain, altitude}) {
      if (!(v > 0.0)) throw ConfigError("link: all parameters must be strictly positive");
    }
    if (radius_override && !(*radius_override >= 0.0)) {
      throw ConfigError("link: radius_override must be >= 0");
    }
  }
};

struct RewardParams {
  double k1 = 100.0;  // deadline violation penalty
  double k2 = 100.0;  // energy violation penalty
  double k3 = 100.0;  // on-time arrival bonus

  void validate() const {
    if (!(k1 > 0.0 && k2 > 0.0 && k3 > 0.0)) throw ConfigError("reward: k1, k2, k3 must be > 0");
  }
};

/// Per-sensor ages, saturating at `cap`.
struct AoIVector {
  std::vector<int> ages;
  int cap = 1;

  static AoIVector fresh(std::size_t n, int cap) { return {std::vector<int>(n, 1), cap}; }
  std::size_t size() const { return ages.size(); }
  int operator[](std::size_t i) const { return ages[i]; }
  friend bool operator==(const AoIVector&, const AoIVector&) = default;
};

enum class TerminalKind : std::uint8_t { Running = 0, Success, TimeViolation, EnergyViolation };

inline const char* to_string(TerminalKind k) {
  switch (k) {
    case TerminalKind::Running: return "running";
    case TerminalKind::Success: return "success";
    case TerminalKind::TimeViolation: return "time_violation";
    case TerminalKind::EnergyViolation: return "energy_violation";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Physics
// ---------------------------------------------------------------------------

/// Rotary-wing propulsion power at horizontal speed `speed`:
/// blade profile + induced + parasite terms.
inline double propulsion_power(double speed, const EnergyParams& e) {
  if (speed == 0.0) return e.p0 + e.p1;
  const double v2 = speed * speed;
  const double blade = e.p0 * (1.0 + 3.0 * v2 / (e.u_tip * e.u_tip));
  // sqrt(1 + x^2) - x with x = V^2 / (2 v0^2), rewritten as 1 / (sqrt(1 + x^2) + x)
  // to avoid catastrophic cancellation when V >> v0.
  const double x = v2 / (2.0 * e.v0 * e.v0);
  const double induced = e.p1 * std::sqrt(1.0 / (std::sqrt(1.0 + x * x) + x));
  const double parasite = 0.5 * e.d0 * e.rho * e.s0 * e.rotor_area * v2 * speed;
  return blade + induced + parasite;
}

// Slack bookkeeping keeps energies on a binary grid of 2^-30 J. Below 2^22 J
// every sum, difference and small-integer multiple of grid values is an exact
// double, so the per-slot slack update and its closed form agree bit for bit.
inline constexpr double kEnergyQuantum = 0x1p-30;
inline constexpr double kEnergyLimit = 0x1p22;

inline double quantize_energy(double joules) {
  return std::nearbyint(joules / kEnergyQuantum) * kEnergyQuantum;
}

/// Energy of one slot at cruise speed, on the bookkeeping grid.
inline double cruise_slot_energy(const EnergyParams& e) {
  return quantize_energy(propulsion_power(e.cruise_speed, e) * e.slot_len);
}

/// Extra energy of a hover slot over a cruise slot, on the bookkeeping grid.
inline double hover_surcharge(const EnergyParams& e) {
  return quantize_energy(propulsion_power(0.0, e) * e.slot_len) - cruise_slot_energy(e);
}

inline double channel_gain(Point uav_ground, Point sensor, const LinkParams& link) {
  const double dx = uav_ground.x - sensor.x;
  const double dy = uav_ground.y - sensor.y;
  return link.ref_gain / (dx * dx + dy * dy + link.altitude * link.altitude);
}

/// Largest horizontal distance at which an update of `update_size` bits fits
/// in one slot of length `slot_len` at the Shannon rate.
inline double coverage_radius(const LinkParams& link, double slot_len) {
  if (link.radius_override) return *link.radius_override;
  const double snr_needed = std::exp2(link.update_size / (link.bandwidth * slot_len)) - 1.0;
  const double reach_sq = link.ref_gain * link.tx_power / (snr_needed * link.noise_power);
  const double h2 = link.altitude * link.altitude;
  if (reach_sq < h2) {
    throw InfeasibleLinkError("link: transmit power too low to close the link at altitude " +
                              std::to_string(link.altitude) + " m");
  }
  return std::sqrt(reach_sq - h2);
}

inline bool in_coverage(Point uav_ground, Point sensor, double radius) {
  return distance(uav_ground, sensor) <= radius;
}

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

/// One-slot age update. `scheduled` is 0 (nobody) or a 1-based sensor id.
inline AoIVector aoi_step(const AoIVector& ages, int scheduled, Point uav_ground,
                          std::span<const SensorNode> sensors, double radius) {
  AoIVector next = ages;
  for (std::size_t i = 0; i < next.ages.size(); ++i) {
    const bool collected = scheduled == static_cast<int>(i) + 1 &&
                           in_coverage(uav_ground, sensors[i].position, radius);
    next.ages[i] = collected ? 1 : std::min(ages.ages[i] + 1, ages.cap);
  }
  return next;
}

inline Cell move(Cell cell, Direction d, const GridSpec& grid) {
  const Cell next = offset(cell, d);
  if (!grid.contains(next)) {
    throw OutOfBoundsError(std::string("move ") + to_string(d) + " from (" +
                           std::to_string(cell.col) + "," + std::to_string(cell.row) +
                           ") leaves the grid");
  }
  return next;
}

/// Remaining slots minus the minimum number of slots needed to reach the stop cell.
constexpr int time_slack(Cell cell, int slot, int horizon, const GridSpec& grid) {
  return (horizon - slot) - manhattan(cell, grid.stop);
}

/// Incremental form of time_slack: unchanged when the move approaches the stop
/// cell, -1 when the distance is unchanged, -2 when it recedes.
constexpr int time_slack_step(int slack, Cell from, Cell to, Cell stop) {
  auto dist_sq = [stop](Cell c) {
    const int dc = c.col - stop.col;
    const int dr = c.row - stop.row;
    return dc * dc + dr * dr;
  };
  const int before = dist_sq(from);
  const int after = dist_sq(to);
  if (before > after) return slack;
  if (before == after) return slack - 1;
  return slack - 2;
}

/// Energy slack left over after budgeting every remaining slot at cruise speed.
inline double initial_energy_slack(int horizon, const EnergyParams& e) {
  return quantize_energy(e.e_max) - (horizon - 1) * cruise_slot_energy(e);
}

inline double energy_slack_after_hovers(int hovers, int horizon, const EnergyParams& e) {
  return initial_energy_slack(horizon, e) - hovers * hover_surcharge(e);
}

inline double energy_slack_step(double slack, Direction d, const EnergyParams& e) {
  if (d != Direction::Hover) return slack;
  return slack - hover_surcharge(e);
}

/// Weighted age cost of one slot, (1/T) * sum_n theta_n * delta_n.
inline double weighted_age_cost(const AoIVector& ages, std::span<const SensorNode> sensors,
                                int horizon) {
  double sum = 0.0;
  for (std::size_t i = 0; i < ages.ages.size(); ++i) sum += sensors[i].weight * ages.ages[i];
  return sum / horizon;
}

inline double step_reward(const AoIVector& post_ages, std::span<const SensorNode> sensors,
                          int horizon, TerminalKind outcome, const RewardParams& rp) {
  const double cost = weighted_age_cost(post_ages, sensors, horizon);
  switch (outcome) {
    case TerminalKind::TimeViolation: return -cost - rp.k1;
    case TerminalKind::EnergyViolation: return -cost - rp.k2;
    case TerminalKind::Success: return -cost + rp.k3;
    case TerminalKind::Running: break;
  }
  return -cost;
}

}  // namespace uavaoi
