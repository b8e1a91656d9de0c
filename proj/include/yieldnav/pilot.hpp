#pragma once

#include <optional>
#include <string>
#include <vector>

#include "yieldnav/potential.hpp"
#include "yieldnav/tracker.hpp"
#include "yieldnav/world.hpp"

namespace yieldnav {

enum class PilotMode { kIdle, kNavigating, kAvoiding, kRecovering };

const char* to_string(PilotMode mode);

// What the robot was doing when the conflict began: the pose to return to
// (interrupted idling) or the goal to resume (interrupted navigation).
struct SavedContext {
  enum class Kind { kPose, kGoal };
  Kind kind{Kind::kPose};
  Vec2 position{};
  double heading{0.0};  // meaningful for kPose only
};

struct PilotParams {
  double d_conflict{0.8};
  double risk_horizon{1.5};
  double t_clear{1.0};          // risk-free seconds before recovery starts
  double arrive_eps{0.15};
  double plan_pot_weight{0.001};  // meters of step cost per unit of potential
  double pursuit_gain{2.0};
  double align_tolerance{0.4};  // rad; beyond this the follower turns in place
};

struct PilotState {
  PilotMode mode{PilotMode::kIdle};
  std::optional<SavedContext> saved;
  double clear_timer{0.0};
  std::optional<Vec2> active_avoidance_point;
};

struct RiskAssessment {
  bool risk{false};
  std::vector<int> offending;  // track ids, ascending
};

// A track is offending when its predicted path over the horizon (or its
// current position) comes within d_conflict of the robot — of the robot's
// position when idle, or of any point on the remaining route when navigating.
RiskAssessment assess_risk(const RobotState& robot, const std::vector<Track>& tracks,
                           const std::vector<Vec2>& route_remaining, double horizon,
                           double step, double d_conflict, double process_noise);

// One FSM step. nav_goal distinguishes the Idle and Navigating base modes;
// context is saved on entry to Avoiding and cleared when recovery arrives.
PilotState transition(PilotState pilot, bool risk, const RobotState& robot,
                      const std::optional<Vec2>& nav_goal, double dt,
                      const PilotParams& params);

struct LocalPlan {
  std::vector<Vec2> waypoints;   // robot position first, target last
  std::vector<int> directions;   // +1 forward / -1 reverse, one per segment
  std::vector<double> speeds;    // m/s, one per segment
  double estimated_duration{0.0};

  std::size_t segment_count() const { return directions.size(); }
};

// Shortest feasible 8-connected grid path from the robot cell to the target
// cell (step length plus plan_pot_weight * potential of the entered cell),
// decimated to segment-feasible waypoints. With allow_reverse, segments
// pointing backward are driven in reverse without reorienting; otherwise
// they cost an in-place turn. nullopt when the target is unreachable.
std::optional<LocalPlan> plan_local(const PotentialMap& map, const RobotState& from,
                                    const Vec2& target, bool allow_reverse,
                                    const PilotParams& params, const KinematicLimits& limits);

struct FollowResult {
  VelocityCommand command{};
  bool arrived{false};
};

// Pure-pursuit toward the next plan waypoint with the segment's signed
// speed. Reverse segments steer the tail toward the waypoint.
FollowResult follow(const LocalPlan& plan, const RobotState& robot, const PilotParams& params,
                    const KinematicLimits& limits);

}  // namespace yieldnav
