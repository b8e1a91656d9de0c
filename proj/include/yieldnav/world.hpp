#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "yieldnav/geom.hpp"
#include "yieldnav/grid.hpp"
#include "yieldnav/rng.hpp"

namespace yieldnav {

// Immutable planar occupancy map. Rows are stored bottom-up: cell (0,0) sits
// at `origin`, y grows with the row index.
struct StaticMap {
  Grid<std::uint8_t> cells;

  const GridFrame& frame() const { return cells.frame(); }
  bool occupied(CellIndex c) const { return cells.at(c) != 0; }
  bool occupied_at(const Vec2& p) const {
    const CellIndex c = frame().world_to_cell(p);
    return frame().in_bounds(c) && occupied(c);
  }

  // Builds a map from text rows ('#' = occupied). rows.front() is the TOP
  // row, matching how the rows read in a scenario file.
  static StaticMap from_rows(const std::vector<std::string>& rows, double resolution,
                             Vec2 origin = {});
};

enum class AgentBehavior { kLoop, kOnce, kHoldAtEnd };

struct AgentWaypoint {
  Vec2 position{};
  double time{0.0};
};

// A scripted disc agent. Position is a pure function of time: piecewise
// linear between waypoints, holding at the first waypoint before the script
// starts. After the last waypoint, behavior decides: loop the script, hold
// the final position, or despawn ("once").
struct AgentScript {
  int id{0};
  double shape_radius{0.25};
  std::vector<AgentWaypoint> waypoints;
  AgentBehavior behavior{AgentBehavior::kHoldAtEnd};
};

// nullopt means the agent is not present (a "once" script that has ended).
std::optional<Vec2> agent_position(const AgentScript& script, double t);

struct RobotState {
  Vec2 position{};
  double heading{0.0};
  double linear_velocity{0.0};   // signed; negative drives in reverse
  double angular_velocity{0.0};
  double footprint_radius{0.2};
};

struct VelocityCommand {
  double linear{0.0};
  double angular{0.0};
};

struct KinematicLimits {
  double v_max{0.6};
  double omega_max{1.5};
};

struct World {
  double time{0.0};
  StaticMap map;
  std::vector<AgentScript> agents;
  RobotState robot;
  VelocityCommand command;
  KinematicLimits limits;
};

// Advances time by dt: the robot integrates its clamped command along a
// unicycle arc, agents follow their scripts. Bit-for-bit deterministic.
World step_world(World world, double dt);

struct SensorNoise {
  double range_std{0.01};
  double jitter_xy_std{0.005};
  double jitter_heading_std{0.005};
};

// One simulated 2D sweep. `sources` parallels `points` and records ground
// truth provenance: -1 for a static-map hit, otherwise the agent id.
struct SensorFrame {
  double timestamp{0.0};
  Vec2 sensor_position{};
  double sensor_heading{0.0};  // pose actually used for rays: truth + jitter
  std::vector<Vec2> points;
  std::vector<int> sources;
  std::vector<double> miss_angles;  // world-frame angles of beams with no return
  double max_range{8.0};
  int beam_count{360};
};

// Beams uniformly spaced over 2*pi from the jittered robot pose. Each beam
// reports the nearest static-cell or agent-disc intersection with additive
// range noise; beams with no hit within max_range land in miss_angles.
SensorFrame cast_scan(const World& world, int beam_count, double max_range,
                      const SensorNoise& noise, Rng& rng);

}  // namespace yieldnav
