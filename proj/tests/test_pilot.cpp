#include <doctest.h>

#include <cmath>

#include "yieldnav/pilot.hpp"
#include "yieldnav/rng.hpp"

using namespace yieldnav;

namespace {

Track make_track(int id, Vec2 pos, Vec2 vel) {
  Track t;
  t.id = id;
  t.state = {pos.x, pos.y, vel.x, vel.y};
  t.covariance = {};
  return t;
}

PotentialMap open_map(int n, double res, const Vec2& goal, double alpha = 0.0) {
  FieldParams params;
  params.alpha = alpha;
  return build_potential({res, {0.0, 0.0}, n, n}, {}, goal, params);
}

PotentialMap map_with_wall(int n, double res, int wall_x, int gap_lo, int gap_hi) {
  InflatedObstacle wall;
  for (int y = 0; y < n; ++y)
    if (y < gap_lo || y > gap_hi) wall.cells.push_back({wall_x, y});
  FieldParams params;
  params.alpha = 0.0;
  params.beta = 0.0;
  return build_potential({res, {0.0, 0.0}, n, n}, {wall}, {0.5 * n * res, 0.5 * n * res},
                         params);
}

constexpr double kTick = 0.1;

}  // namespace

TEST_CASE("a track heading at an idle robot raises risk") {
  RobotState robot;
  robot.position = {0.0, 0.0};
  const Track t = make_track(3, {2.0, 0.0}, {-1.0, 0.0});
  const auto r = assess_risk(robot, {t}, {}, 1.5, kTick, 0.8, 0.01);
  CHECK(r.risk);
  CHECK(r.offending == std::vector<int>{3});
}

TEST_CASE("a parallel passer at two meters lateral offset is no risk") {
  RobotState robot;
  robot.position = {0.0, 0.0};
  const Track t = make_track(1, {2.0, 2.0}, {-1.0, 0.0});
  const auto r = assess_risk(robot, {t}, {}, 1.5, kTick, 0.8, 0.01);
  CHECK(!r.risk);
  CHECK(r.offending.empty());
}

TEST_CASE("no tracks means no risk") {
  RobotState robot;
  const auto r = assess_risk(robot, {}, {}, 1.5, kTick, 0.8, 0.01);
  CHECK(!r.risk);
}

TEST_CASE("a track crossing the planned route is a risk even far from the robot") {
  RobotState robot;
  robot.position = {0.0, 0.0};
  const std::vector<Vec2> route = {{2.0, 0.0}, {6.0, 0.0}};
  const Track t = make_track(2, {5.0, 1.0}, {0.0, -1.0});
  CHECK(assess_risk(robot, {t}, route, 1.5, kTick, 0.8, 0.01).risk);
  CHECK(!assess_risk(robot, {t}, {}, 1.5, kTick, 0.8, 0.01).risk);
}

TEST_CASE("fsm saves the pose when idle and the goal when navigating") {
  PilotParams params;
  RobotState robot;
  robot.position = {1.0, 2.0};
  robot.heading = 0.3;

  SUBCASE("idle to avoiding records the pose") {
    PilotState pilot;
    pilot = transition(pilot, true, robot, std::nullopt, kTick, params);
    CHECK(pilot.mode == PilotMode::kAvoiding);
    REQUIRE(pilot.saved.has_value());
    CHECK(pilot.saved->kind == SavedContext::Kind::kPose);
    CHECK(pilot.saved->position.x == 1.0);
    CHECK(pilot.saved->heading == doctest::Approx(0.3));
  }
  SUBCASE("navigating to avoiding records the goal") {
    PilotState pilot;
    pilot.mode = PilotMode::kNavigating;
    pilot = transition(pilot, true, robot, Vec2{5.0, 5.0}, kTick, params);
    CHECK(pilot.mode == PilotMode::kAvoiding);
    REQUIRE(pilot.saved.has_value());
    CHECK(pilot.saved->kind == SavedContext::Kind::kGoal);
    CHECK(pilot.saved->position.x == 5.0);
  }
}

TEST_CASE("avoiding leaves for recovery only after the clear hold") {
  PilotParams params;
  params.t_clear = 1.0;
  RobotState robot;
  PilotState pilot;
  pilot = transition(pilot, true, robot, std::nullopt, kTick, params);
  REQUIRE(pilot.mode == PilotMode::kAvoiding);

  for (int i = 0; i < 9; ++i) {
    pilot = transition(pilot, false, robot, std::nullopt, kTick, params);
    CHECK(pilot.mode == PilotMode::kAvoiding);
  }
  pilot = transition(pilot, false, robot, std::nullopt, kTick, params);
  CHECK(pilot.mode == PilotMode::kRecovering);

  SUBCASE("renewed risk during the hold resets the timer") {
    PilotState p2;
    p2 = transition(p2, true, robot, std::nullopt, kTick, params);
    for (int i = 0; i < 5; ++i) p2 = transition(p2, false, robot, std::nullopt, kTick, params);
    p2 = transition(p2, true, robot, std::nullopt, kTick, params);
    CHECK(p2.clear_timer == 0.0);
    for (int i = 0; i < 9; ++i) {
      p2 = transition(p2, false, robot, std::nullopt, kTick, params);
      CHECK(p2.mode == PilotMode::kAvoiding);
    }
  }
}

TEST_CASE("recovery returns to the saved pose and re-enters avoidance on risk") {
  PilotParams params;
  RobotState robot;
  robot.position = {1.0, 1.0};
  PilotState pilot;
  pilot = transition(pilot, true, robot, std::nullopt, kTick, params);
  for (int i = 0; i < 10; ++i) pilot = transition(pilot, false, robot, std::nullopt, kTick, params);
  REQUIRE(pilot.mode == PilotMode::kRecovering);

  SUBCASE("risk re-enters avoiding with the context retained") {
    const Vec2 saved = pilot.saved->position;
    pilot = transition(pilot, true, robot, std::nullopt, kTick, params);
    CHECK(pilot.mode == PilotMode::kAvoiding);
    REQUIRE(pilot.saved.has_value());
    CHECK(pilot.saved->position.x == saved.x);
  }
  SUBCASE("arrival within eps closes the loop back to idle") {
    robot.position = {1.0 + 0.9 * params.arrive_eps, 1.0};
    pilot = transition(pilot, false, robot, std::nullopt, kTick, params);
    CHECK(pilot.mode == PilotMode::kIdle);
    CHECK(!pilot.saved.has_value());
  }
  SUBCASE("far from the saved pose it keeps recovering") {
    robot.position = {3.0, 1.0};
    pilot = transition(pilot, false, robot, std::nullopt, kTick, params);
    CHECK(pilot.mode == PilotMode::kRecovering);
  }
}

TEST_CASE("goal context recovery resumes navigating") {
  PilotParams params;
  RobotState robot;
  robot.position = {0.5, 0.5};
  PilotState pilot;
  pilot.mode = PilotMode::kNavigating;
  const std::optional<Vec2> goal{{4.0, 0.5}};
  pilot = transition(pilot, true, robot, goal, kTick, params);
  for (int i = 0; i < 10; ++i) pilot = transition(pilot, false, robot, goal, kTick, params);
  REQUIRE(pilot.mode == PilotMode::kRecovering);
  robot.position = {4.0, 0.5};
  pilot = transition(pilot, false, robot, goal, kTick, params);
  CHECK(pilot.mode == PilotMode::kNavigating);
  CHECK(!pilot.saved.has_value());
}

TEST_CASE("fsm invariant: context present exactly while avoiding or recovering") {
  PilotParams params;
  RobotState robot;
  Rng rng(71);
  PilotState pilot;
  std::optional<Vec2> goal;
  for (int i = 0; i < 500; ++i) {
    if (i % 97 == 0) goal = goal ? std::nullopt : std::optional<Vec2>{{3.0, 3.0}};
    const bool risk = rng.uniform01() < 0.3;
    robot.position = {rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0)};
    pilot = transition(pilot, risk, robot, goal, kTick, params);
    const bool excursion =
        pilot.mode == PilotMode::kAvoiding || pilot.mode == PilotMode::kRecovering;
    REQUIRE(pilot.saved.has_value() == excursion);
    if (risk) REQUIRE(pilot.mode == PilotMode::kAvoiding);
  }
}

TEST_CASE("reverse plan for a target directly behind keeps the heading") {
  const PotentialMap map = open_map(60, 0.1, {3.0, 3.0});
  RobotState robot;
  robot.position = {3.0, 3.0};
  robot.heading = 0.0;
  const Vec2 target{2.0, 3.0};
  const KinematicLimits limits{0.6, 1.5};

  const auto reverse_plan = plan_local(map, robot, target, true, PilotParams{}, limits);
  REQUIRE(reverse_plan.has_value());
  REQUIRE(reverse_plan->segment_count() >= 1);
  for (const int dir : reverse_plan->directions) CHECK(dir == -1);

  const auto forward_plan = plan_local(map, robot, target, false, PilotParams{}, limits);
  REQUIRE(forward_plan.has_value());
  CHECK(forward_plan->directions.front() == 1);
  // the forward variant pays a pi in-place turn
  CHECK(forward_plan->estimated_duration >
        reverse_plan->estimated_duration + 0.9 * M_PI / limits.omega_max);
}

TEST_CASE("open-map path length stays within the octile bound of the straight line") {
  const PotentialMap map = open_map(100, 0.1, {5.0, 5.0});
  RobotState robot;
  robot.position = {1.05, 1.05};
  const Vec2 target{8.05, 4.35};
  const auto plan = plan_local(map, robot, target, true, PilotParams{}, {0.6, 1.5});
  REQUIRE(plan.has_value());
  double length = 0.0;
  for (std::size_t i = 0; i + 1 < plan->waypoints.size(); ++i)
    length += distance(plan->waypoints[i], plan->waypoints[i + 1]);
  const double straight = distance(robot.position, target);
  CHECK(length <= 1.081 * straight + 2.0 * 0.1);
}

TEST_CASE("planner routes through gaps and fails cleanly on sealed walls") {
  RobotState robot;
  robot.position = {0.55, 1.05};
  const Vec2 target{1.85, 1.05};

  SUBCASE("gap in the wall is used") {
    const PotentialMap map = map_with_wall(20, 0.1, 10, 14, 16);
    const auto plan = plan_local(map, robot, target, true, PilotParams{}, {0.6, 1.5});
    REQUIRE(plan.has_value());
    // the path must pass through the gap rows
    bool through_gap = false;
    for (const Vec2& w : plan->waypoints)
      if (w.x > 1.0 && w.x < 1.2 && w.y > 1.4) through_gap = true;
    for (std::size_t i = 0; i + 1 < plan->waypoints.size(); ++i) {
      // replay the segments against the mask
      const auto cells = segment_cells(map.frame(), plan->waypoints[i], plan->waypoints[i + 1]);
      for (const CellIndex c : cells)
        REQUIRE((map.feasible(c) ||
                 c == map.frame().world_to_cell(robot.position)));
    }
    CHECK(through_gap);
  }
  SUBCASE("sealed wall yields no path") {
    const PotentialMap map = map_with_wall(20, 0.1, 10, 5, 3);  // empty gap range
    CHECK(!plan_local(map, robot, target, true, PilotParams{}, {0.6, 1.5}).has_value());
  }
}

TEST_CASE("follow reports arrival and stops at the final waypoint") {
  LocalPlan plan;
  plan.waypoints = {{0.0, 0.0}, {1.0, 0.0}};
  plan.directions = {1};
  plan.speeds = {0.6};
  RobotState robot;
  robot.position = {0.99, 0.0};
  const auto r = follow(plan, robot, PilotParams{}, {0.6, 1.5});
  CHECK(r.arrived);
  CHECK(r.command.linear == 0.0);
  CHECK(r.command.angular == 0.0);
}

TEST_CASE("follow drives a reverse segment with negative speed") {
  LocalPlan plan;
  plan.waypoints = {{1.0, 1.0}, {0.0, 1.0}};
  plan.directions = {-1};
  plan.speeds = {0.6};
  RobotState robot;
  robot.position = {1.0, 1.0};
  robot.heading = 0.0;  // target is directly behind
  const auto r = follow(plan, robot, PilotParams{}, {0.6, 1.5});
  CHECK(r.command.linear < 0.0);
  CHECK(std::abs(r.command.angular) < 1e-9);
}

TEST_CASE("closed-loop corridor following stays within tracking tolerance") {
  // drive a straight 4 m plan in an open world and measure cross-track error
  World w;
  w.map = StaticMap::from_rows(std::vector<std::string>(80, std::string(80, '.')), 0.1);
  w.robot.position = {1.0, 4.0};
  w.robot.heading = 0.0;
  w.limits = {0.6, 1.5};

  LocalPlan plan;
  plan.waypoints = {{1.0, 4.0}, {5.0, 4.0}};
  plan.directions = {1};
  plan.speeds = {0.6};

  PilotParams params;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto r = follow(plan, w.robot, params, w.limits);
    if (r.arrived) break;
    w.command = r.command;
    w = step_world(w, 0.1);
    worst = std::max(worst, std::abs(w.robot.position.y - 4.0));
  }
  CHECK(worst < 0.15);
  CHECK(distance(w.robot.position, {5.0, 4.0}) < params.arrive_eps + 1e-6);
}

TEST_CASE("relaxed direction never plans a slower execution") {
  const PotentialMap map = open_map(80, 0.1, {4.0, 4.0});
  Rng rng(31);
  for (int i = 0; i < 30; ++i) {
    RobotState robot;
    robot.position = {rng.uniform(1.0, 7.0), rng.uniform(1.0, 7.0)};
    robot.heading = rng.uniform(-M_PI, M_PI);
    const Vec2 target{rng.uniform(1.0, 7.0), rng.uniform(1.0, 7.0)};
    const auto with = plan_local(map, robot, target, true, PilotParams{}, {0.6, 1.5});
    const auto without = plan_local(map, robot, target, false, PilotParams{}, {0.6, 1.5});
    REQUIRE(with.has_value());
    REQUIRE(without.has_value());
    CHECK(with->estimated_duration <= without->estimated_duration + 1e-9);
  }
}
