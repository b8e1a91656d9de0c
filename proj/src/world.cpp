#include "yieldnav/world.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace yieldnav {

StaticMap StaticMap::from_rows(const std::vector<std::string>& rows, double resolution,
                               Vec2 origin) {
  if (rows.empty() || rows.front().empty()) throw std::invalid_argument("map rows are empty");
  if (resolution <= 0.0) throw std::invalid_argument("map resolution must be > 0");
  const int height = static_cast<int>(rows.size());
  const int width = static_cast<int>(rows.front().size());
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != width)
      throw std::invalid_argument("map rows have unequal length");
  }
  StaticMap map;
  map.cells = Grid<std::uint8_t>({resolution, origin, width, height}, 0);
  for (int y = 0; y < height; ++y) {
    // rows.front() is the top row; flip so y grows upward in the world.
    const std::string& row = rows[height - 1 - y];
    for (int x = 0; x < width; ++x) {
      map.cells.at({x, y}) = row[x] == '#' ? 1 : 0;
    }
  }
  return map;
}

std::optional<Vec2> agent_position(const AgentScript& script, double t) {
  const auto& wps = script.waypoints;
  if (wps.empty()) return std::nullopt;
  if (wps.size() == 1 || t <= wps.front().time) {
    if (script.behavior == AgentBehavior::kOnce && wps.size() == 1 && t > wps.front().time)
      return std::nullopt;
    return wps.front().position;
  }
  const double t0 = wps.front().time;
  const double t_end = wps.back().time;
  double tq = t;
  if (t > t_end) {
    switch (script.behavior) {
      case AgentBehavior::kHoldAtEnd:
        return wps.back().position;
      case AgentBehavior::kOnce:
        return std::nullopt;
      case AgentBehavior::kLoop:
        tq = t0 + std::fmod(t - t0, t_end - t0);
        break;
    }
  }
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    if (tq <= wps[i + 1].time) {
      const double span = wps[i + 1].time - wps[i].time;
      const double u = span > 0.0 ? (tq - wps[i].time) / span : 1.0;
      return wps[i].position + (wps[i + 1].position - wps[i].position) * u;
    }
  }
  return wps.back().position;
}

World step_world(World world, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("step_world: dt must be > 0");
  RobotState& r = world.robot;
  const double v = std::clamp(world.command.linear, -world.limits.v_max, world.limits.v_max);
  const double w =
      std::clamp(world.command.angular, -world.limits.omega_max, world.limits.omega_max);
  if (std::abs(w) < 1e-12) {
    r.position += heading_vec(r.heading) * (v * dt);
  } else {
    // exact constant-twist arc
    const double h0 = r.heading;
    const double h1 = h0 + w * dt;
    r.position.x += v / w * (std::sin(h1) - std::sin(h0));
    r.position.y += -v / w * (std::cos(h1) - std::cos(h0));
  }
  r.heading = wrap_angle(r.heading + w * dt);
  r.linear_velocity = v;
  r.angular_velocity = w;
  world.time += dt;
  return world;
}

namespace {

// Smallest positive ray parameter where the ray hits the disc, or +inf.
double ray_disc_intersection(const Vec2& origin, const Vec2& dir, const Vec2& center,
                             double radius) {
  const Vec2 oc = origin - center;
  const double b = oc.dot(dir);
  const double c = oc.norm_sq() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double sq = std::sqrt(disc);
  const double t1 = -b - sq;
  if (t1 > 0.0) return t1;
  const double t2 = -b + sq;
  if (t2 > 0.0) return t2;  // origin inside the disc
  return std::numeric_limits<double>::infinity();
}

}  // namespace

SensorFrame cast_scan(const World& world, int beam_count, double max_range,
                      const SensorNoise& noise, Rng& rng) {
  if (beam_count < 1) throw std::invalid_argument("cast_scan: beam_count must be >= 1");
  if (max_range <= 0.0) throw std::invalid_argument("cast_scan: max_range must be > 0");

  SensorFrame frame;
  frame.timestamp = world.time;
  frame.max_range = max_range;
  frame.beam_count = beam_count;
  frame.sensor_position = {world.robot.position.x + rng.gaussian(0.0, noise.jitter_xy_std),
                           world.robot.position.y + rng.gaussian(0.0, noise.jitter_xy_std)};
  frame.sensor_heading =
      wrap_angle(world.robot.heading + rng.gaussian(0.0, noise.jitter_heading_std));

  struct ActiveAgent {
    int id;
    Vec2 pos;
    double radius;
  };
  std::vector<ActiveAgent> active;
  for (const auto& a : world.agents) {
    if (const auto p = agent_position(a, world.time)) active.push_back({a.id, *p, a.shape_radius});
  }

  const GridFrame& mf = world.map.frame();
  for (int i = 0; i < beam_count; ++i) {
    const double angle = wrap_angle(frame.sensor_heading + 2.0 * M_PI * i / beam_count);
    const Vec2 dir = heading_vec(angle);

    double best_t = std::numeric_limits<double>::infinity();
    int best_source = -1;
    march_ray(mf, frame.sensor_position, dir, max_range, [&](CellIndex c, double t_entry) {
      if (world.map.occupied(c)) {
        best_t = std::max(t_entry, 0.0);
        return false;
      }
      return true;
    });
    for (const auto& a : active) {
      const double t = ray_disc_intersection(frame.sensor_position, dir, a.pos, a.radius);
      if (t < best_t) {
        best_t = t;
        best_source = a.id;
      }
    }
    if (best_t <= max_range) {
      const double r =
          std::clamp(best_t + rng.gaussian(0.0, noise.range_std), 1e-6, max_range);
      frame.points.push_back(frame.sensor_position + dir * r);
      frame.sources.push_back(best_source);
    } else {
      frame.miss_angles.push_back(angle);
    }
  }
  return frame;
}

}  // namespace yieldnav
