#include "yieldnav/pilot.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace yieldnav {

const char* to_string(PilotMode mode) {
  switch (mode) {
    case PilotMode::kIdle:
      return "idle";
    case PilotMode::kNavigating:
      return "navigating";
    case PilotMode::kAvoiding:
      return "avoiding";
    case PilotMode::kRecovering:
      return "recovering";
  }
  return "?";
}

namespace {

double min_distance_to_polyline(const Vec2& p, const std::vector<Vec2>& line) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return distance(p, line.front());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    best = std::min(best, point_segment_distance(p, line[i], line[i + 1]));
  return best;
}

}  // namespace

RiskAssessment assess_risk(const RobotState& robot, const std::vector<Track>& tracks,
                           const std::vector<Vec2>& route_remaining, double horizon,
                           double step, double d_conflict, double process_noise) {
  if (horizon <= 0.0 || d_conflict <= 0.0)
    throw std::invalid_argument("assess_risk: horizon and d_conflict must be > 0");

  std::vector<Vec2> reference;
  reference.push_back(robot.position);
  reference.insert(reference.end(), route_remaining.begin(), route_remaining.end());

  RiskAssessment out;
  for (const Track& t : tracks) {
    bool conflict = min_distance_to_polyline(t.position(), reference) < d_conflict;
    if (!conflict) {
      for (const Vec2& sample : predict_path(t, horizon, step, process_noise)) {
        if (min_distance_to_polyline(sample, reference) < d_conflict) {
          conflict = true;
          break;
        }
      }
    }
    if (conflict) out.offending.push_back(t.id);
  }
  std::sort(out.offending.begin(), out.offending.end());
  out.risk = !out.offending.empty();
  return out;
}

PilotState transition(PilotState pilot, bool risk, const RobotState& robot,
                      const std::optional<Vec2>& nav_goal, double dt,
                      const PilotParams& params) {
  switch (pilot.mode) {
    case PilotMode::kIdle:
    case PilotMode::kNavigating:
      // Base mode tracks whether a navigation goal exists.
      pilot.mode = nav_goal ? PilotMode::kNavigating : PilotMode::kIdle;
      if (risk) {
        SavedContext ctx;
        if (pilot.mode == PilotMode::kNavigating) {
          ctx.kind = SavedContext::Kind::kGoal;
          ctx.position = *nav_goal;
        } else {
          ctx.kind = SavedContext::Kind::kPose;
          ctx.position = robot.position;
          ctx.heading = robot.heading;
        }
        pilot.saved = ctx;
        pilot.mode = PilotMode::kAvoiding;
        pilot.clear_timer = 0.0;
      }
      break;
    case PilotMode::kAvoiding:
      if (risk) {
        pilot.clear_timer = 0.0;
      } else {
        pilot.clear_timer += dt;
        // tolerance for accumulated tick rounding
        if (pilot.clear_timer >= params.t_clear - 1e-9) {
          pilot.mode = PilotMode::kRecovering;
        }
      }
      break;
    case PilotMode::kRecovering:
      if (risk) {
        pilot.mode = PilotMode::kAvoiding;  // context retained
        pilot.clear_timer = 0.0;
      } else if (distance(robot.position, pilot.saved->position) <= params.arrive_eps) {
        pilot.mode = pilot.saved->kind == SavedContext::Kind::kGoal ? PilotMode::kNavigating
                                                                    : PilotMode::kIdle;
        pilot.saved.reset();
        pilot.active_avoidance_point.reset();
        pilot.clear_timer = 0.0;
      }
      break;
  }
  return pilot;
}

namespace {

struct AStarNode {
  double f;
  double g;
  int cell;
};

struct NodeOrder {
  bool operator()(const AStarNode& a, const AStarNode& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g > b.g;
    return a.cell > b.cell;
  }
};

double octile(CellIndex a, CellIndex b, double res) {
  const double dx = std::abs(a.x - b.x);
  const double dy = std::abs(a.y - b.y);
  return res * (std::max(dx, dy) + (M_SQRT2 - 1.0) * std::min(dx, dy));
}

}  // namespace

std::optional<LocalPlan> plan_local(const PotentialMap& map, const RobotState& from,
                                    const Vec2& target, bool allow_reverse,
                                    const PilotParams& params, const KinematicLimits& limits) {
  const GridFrame& f = map.frame();
  if (!f.contains(from.position) || !f.contains(target)) return std::nullopt;
  const CellIndex start = f.world_to_cell(from.position);
  const CellIndex goal = f.world_to_cell(target);
  if (!map.feasible(goal)) return std::nullopt;

  // The start cell is always passable so the robot can escape a region that
  // became infeasible around it.
  auto passable = [&](CellIndex c) { return map.feasible(c) || c == start; };

  const std::size_t n = f.size();
  std::vector<double> g_cost(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::priority_queue<AStarNode, std::vector<AStarNode>, NodeOrder> open;

  const int start_i = static_cast<int>(f.index(start));
  g_cost[start_i] = 0.0;
  open.push({octile(start, goal, f.resolution), 0.0, start_i});

  const int goal_i = static_cast<int>(f.index(goal));
  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  while (!open.empty()) {
    const AStarNode node = open.top();
    open.pop();
    if (node.cell == goal_i) break;
    if (node.g > g_cost[node.cell]) continue;
    const CellIndex c{node.cell % f.width, node.cell / f.width};
    for (int k = 0; k < 8; ++k) {
      const CellIndex nb{c.x + kDx[k], c.y + kDy[k]};
      if (!f.in_bounds(nb) || !passable(nb)) continue;
      if (k >= 4) {
        // no corner cutting between diagonal neighbors
        if (!passable({c.x + kDx[k], c.y}) || !passable({c.x, c.y + kDy[k]})) continue;
      }
      const double step = (k >= 4 ? M_SQRT2 : 1.0) * f.resolution;
      const double cost = step + params.plan_pot_weight * map.u(nb);
      const int nb_i = static_cast<int>(f.index(nb));
      const double g_new = node.g + cost;
      if (g_new < g_cost[nb_i]) {
        g_cost[nb_i] = g_new;
        parent[nb_i] = node.cell;
        open.push({g_new + octile(nb, goal, f.resolution), g_new, nb_i});
      }
    }
  }
  if (g_cost[goal_i] == std::numeric_limits<double>::infinity()) return std::nullopt;

  std::vector<CellIndex> path_cells;
  for (int i = goal_i; i != -1; i = parent[i])
    path_cells.push_back({i % f.width, i / f.width});
  std::reverse(path_cells.begin(), path_cells.end());

  // Decimate to line-of-sight waypoints. The start cell counts as feasible
  // for the same escape reason as above.
  auto seg_ok = [&](const Vec2& a, const Vec2& b) {
    bool ok = true;
    const Vec2 d = b - a;
    const double len = d.norm();
    if (len == 0.0) return true;
    march_ray(f, a, d / len, len, [&](CellIndex cc, double) {
      if (!passable(cc)) {
        ok = false;
        return false;
      }
      return true;
    });
    return ok;
  };

  LocalPlan plan;
  plan.waypoints.push_back(from.position);
  std::size_t anchor = 0;
  while (anchor + 1 < path_cells.size()) {
    std::size_t best = anchor + 1;
    for (std::size_t j = path_cells.size() - 1; j > anchor; --j) {
      if (seg_ok(plan.waypoints.back(), f.cell_center(path_cells[j]))) {
        best = j;
        break;
      }
    }
    plan.waypoints.push_back(f.cell_center(path_cells[best]));
    anchor = best;
  }
  // land on the exact target rather than its cell center
  if (plan.waypoints.size() >= 2 &&
      f.world_to_cell(plan.waypoints.back()) == f.world_to_cell(target)) {
    plan.waypoints.back() = target;
  } else {
    plan.waypoints.push_back(target);
  }

  std::erase_if(plan.waypoints, [&, prev = Vec2{std::nan(""), 0.0}](const Vec2& w) mutable {
    const bool duplicate = !std::isnan(prev.x) && distance(w, prev) < 1e-9;
    if (!duplicate) prev = w;
    return duplicate;
  });

  double heading = from.heading;
  for (std::size_t i = 0; i + 1 < plan.waypoints.size(); ++i) {
    const Vec2 seg = plan.waypoints[i + 1] - plan.waypoints[i];
    const double seg_len = seg.norm();
    const double seg_dir = std::atan2(seg.y, seg.x);
    int direction = 1;
    if (allow_reverse && std::abs(wrap_angle(seg_dir - heading)) > M_PI / 2.0) direction = -1;
    const double align = direction == 1 ? seg_dir : wrap_angle(seg_dir + M_PI);
    plan.estimated_duration += std::abs(wrap_angle(align - heading)) / limits.omega_max;
    plan.estimated_duration += seg_len / limits.v_max;
    plan.directions.push_back(direction);
    plan.speeds.push_back(limits.v_max);
    heading = align;
  }
  if (plan.directions.empty()) {
    // already at the target cell: degenerate single-point plan
    plan.waypoints = {from.position, target};
    plan.directions = {1};
    plan.speeds = {limits.v_max};
    plan.estimated_duration = distance(from.position, target) / limits.v_max;
  }
  return plan;
}

FollowResult follow(const LocalPlan& plan, const RobotState& robot, const PilotParams& params,
                    const KinematicLimits& limits) {
  FollowResult out;
  if (plan.waypoints.size() < 2) {
    out.arrived = true;
    return out;
  }
  const Vec2 final_wp = plan.waypoints.back();
  const double d_final = distance(robot.position, final_wp);
  if (d_final <= params.arrive_eps) {
    out.arrived = true;
    return out;
  }

  // First waypoint not yet reached; plans are rebuilt every tick, so this
  // is almost always waypoint 1.
  std::size_t target_i = plan.waypoints.size() - 1;
  for (std::size_t i = 1; i < plan.waypoints.size(); ++i) {
    if (distance(robot.position, plan.waypoints[i]) > params.arrive_eps) {
      target_i = i;
      break;
    }
  }
  const Vec2 target = plan.waypoints[target_i];
  const int direction = plan.directions[target_i - 1];
  const double speed = plan.speeds[target_i - 1];

  const Vec2 to_target = target - robot.position;
  const double bearing = std::atan2(to_target.y, to_target.x);
  const double reference = direction == 1 ? robot.heading : wrap_angle(robot.heading + M_PI);
  const double align_error = wrap_angle(bearing - reference);

  out.command.angular =
      std::clamp(params.pursuit_gain * align_error, -limits.omega_max, limits.omega_max);
  if (std::abs(align_error) <= params.align_tolerance) {
    const double v_mag = std::min({speed, limits.v_max, 2.0 * d_final});
    out.command.linear = direction * v_mag;
  }
  return out;
}

}  // namespace yieldnav
