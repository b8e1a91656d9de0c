#pragma once

#include <cstdint>
#include <vector>

#include "yieldnav/grid.hpp"
#include "yieldnav/tracker.hpp"
#include "yieldnav/world.hpp"

namespace yieldnav {

struct FieldParams {
  double alpha{1.0};        // attractive gain
  double beta{25.0};        // repulsive gain
  double d0{1.0};           // obstacle influence distance
  double u_cap{1000.0};     // potential assigned where d(x) = 0
  double threshold{90.0};   // feasibility cutoff on U
  double horizon{1.5};      // seconds of predicted motion swept into obstacles
  double margin{0.1};       // extra inflation on top of the robot footprint
  double r_goal{1.5};       // retreat-goal distance from the robot
  double window{8.0};       // side of the robot-centered map window
  double predict_step{0.1};
};

struct InflatedObstacle {
  enum class Kind { kStatic, kDynamicSwept };
  Kind kind{Kind::kStatic};
  int source_track{-1};
  std::vector<CellIndex> cells;  // claimed cells, in the window frame, row-major order
};

// Robot-centered square window, snapped to the world grid and clipped to it.
GridFrame field_window(const GridFrame& world, const Vec2& center, double window);

// Union of the track's bbox translated along its predicted path over the
// horizon, inflated by `inflation` on every side. A zero-velocity track
// claims only its inflated current bbox.
InflatedObstacle sweep_dilate(const GridFrame& frame, const Track& track, double horizon,
                              double predict_step, double inflation, double process_noise);

// Occupied static cells in (or near) the window, dilated by `inflation`.
InflatedObstacle inflate_static(const GridFrame& frame, const StaticMap& map, double inflation);

// Retreat goal: r_goal away from the robot, opposite the 1/distance-weighted
// mean bearing of the offending tracks. With a degenerate mean (opposed
// approaches) falls back to whichever perpendicular has more static clearance.
Vec2 choose_local_goal(const RobotState& robot, const std::vector<Track>& offending,
                       const StaticMap& map, double r_goal);

class PotentialMap {
 public:
  PotentialMap() = default;

  const GridFrame& frame() const { return frame_; }
  const Vec2& goal() const { return goal_; }
  const FieldParams& params() const { return params_; }

  double u(CellIndex c) const { return u_[frame_.index(c)]; }
  double dist(CellIndex c) const { return dist_[frame_.index(c)]; }
  bool feasible(CellIndex c) const { return feasible_[frame_.index(c)] != 0; }
  bool claimed(CellIndex c) const { return claimed_[frame_.index(c)] != 0; }
  bool feasible_at(const Vec2& p) const {
    const CellIndex c = frame_.world_to_cell(p);
    return frame_.in_bounds(c) && feasible(c);
  }
  double u_at(const Vec2& p) const;

  const std::vector<double>& u_cells() const { return u_; }
  const std::vector<std::uint8_t>& feasible_cells() const { return feasible_; }

  friend PotentialMap build_potential(const GridFrame& frame,
                                      const std::vector<InflatedObstacle>& obstacles,
                                      const Vec2& goal, const FieldParams& params);

 private:
  GridFrame frame_{};
  Vec2 goal_{};
  FieldParams params_{};
  std::vector<double> u_;
  std::vector<double> dist_;
  std::vector<std::uint8_t> feasible_;
  std::vector<std::uint8_t> claimed_;
};

// U = 1/2*alpha*|x-goal|^2 plus the repulsive term of the exact euclidean
// distance to the claimed-cell union; cells at U <= threshold are feasible.
// Throws std::invalid_argument if the goal lies outside the frame.
PotentialMap build_potential(const GridFrame& frame,
                             const std::vector<InflatedObstacle>& obstacles, const Vec2& goal,
                             const FieldParams& params);

// Distance (meters) from x to the nearest claimed cell center, zero inside
// obstacles, evaluated at cell-center resolution. Throws std::out_of_range
// for x outside the map.
double distance_to_obstacles(const PotentialMap& map, const Vec2& x);

// Exact squared euclidean distance transform in cell units; sources where
// mask != 0. Unreachable cells (empty mask) come back as +inf.
std::vector<double> edt_squared(const std::vector<std::uint8_t>& mask, int width, int height);

}  // namespace yieldnav
