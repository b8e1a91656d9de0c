#include "yieldnav/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace yieldnav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stamps every cell whose center falls inside the box into the mask.
void stamp_box(const GridFrame& f, const Aabb& box, std::vector<std::uint8_t>& mask) {
  const CellIndex lo = f.world_to_cell(box.min);
  const CellIndex hi = f.world_to_cell(box.max);
  for (int y = std::max(lo.y, 0); y <= std::min(hi.y, f.height - 1); ++y)
    for (int x = std::max(lo.x, 0); x <= std::min(hi.x, f.width - 1); ++x) {
      const Vec2 c = f.cell_center({x, y});
      if (box.contains(c)) mask[f.index({x, y})] = 1;
    }
}

std::vector<CellIndex> mask_to_cells(const GridFrame& f, const std::vector<std::uint8_t>& mask) {
  std::vector<CellIndex> cells;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      if (mask[f.index({x, y})]) cells.push_back({x, y});
  return cells;
}

// 1D lower envelope of parabolas (Felzenszwalb & Huttenlocher).
void edt_1d(const double* f, int n, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[0]] == kInf) {
      v[0] = q;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    if (f[v[0]] == kInf) {
      d[q] = kInf;
      continue;
    }
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> edt_squared(const std::vector<std::uint8_t>& mask, int width, int height) {
  std::vector<double> dist(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = mask[i] ? 0.0 : kInf;

  const int n = std::max(width, height);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) f[y] = dist[static_cast<std::size_t>(y) * width + x];
    edt_1d(f.data(), height, d, v, z);
    for (int y = 0; y < height; ++y) dist[static_cast<std::size_t>(y) * width + x] = d[y];
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) f[x] = dist[static_cast<std::size_t>(y) * width + x];
    edt_1d(f.data(), width, d, v, z);
    for (int x = 0; x < width; ++x) dist[static_cast<std::size_t>(y) * width + x] = d[x];
  }
  return dist;
}

GridFrame field_window(const GridFrame& world, const Vec2& center, double window) {
  const double half = window / 2.0;
  const CellIndex lo = world.world_to_cell({center.x - half, center.y - half});
  const CellIndex hi = world.world_to_cell({center.x + half, center.y + half});
  const int x0 = std::clamp(lo.x, 0, world.width - 1);
  const int y0 = std::clamp(lo.y, 0, world.height - 1);
  const int x1 = std::clamp(hi.x, 0, world.width - 1);
  const int y1 = std::clamp(hi.y, 0, world.height - 1);
  GridFrame f;
  f.resolution = world.resolution;
  f.origin = {world.origin.x + x0 * world.resolution, world.origin.y + y0 * world.resolution};
  f.width = x1 - x0 + 1;
  f.height = y1 - y0 + 1;
  return f;
}

InflatedObstacle sweep_dilate(const GridFrame& frame, const Track& track, double horizon,
                              double predict_step, double inflation, double process_noise) {
  if (horizon <= 0.0) throw std::invalid_argument("sweep_dilate: horizon must be > 0");
  if (inflation < 0.0) throw std::invalid_argument("sweep_dilate: inflation must be >= 0");

  std::vector<std::uint8_t> mask(frame.size(), 0);
  const Vec2 current = track.position();
  stamp_box(frame, track.bbox.expanded(inflation), mask);
  for (const Vec2& sample : predict_path(track, horizon, predict_step, process_noise)) {
    stamp_box(frame, track.bbox.translated(sample - current).expanded(inflation), mask);
  }
  InflatedObstacle obstacle;
  obstacle.kind = InflatedObstacle::Kind::kDynamicSwept;
  obstacle.source_track = track.id;
  obstacle.cells = mask_to_cells(frame, mask);
  return obstacle;
}

InflatedObstacle inflate_static(const GridFrame& frame, const StaticMap& map, double inflation) {
  std::vector<std::uint8_t> mask(frame.size(), 0);
  const GridFrame& wf = map.frame();
  const int pad = static_cast<int>(std::ceil(inflation / wf.resolution)) + 1;
  const CellIndex lo = wf.world_to_cell(frame.origin);
  const CellIndex hi = wf.world_to_cell(frame.max_corner());
  const double r_sq = inflation * inflation;
  for (int wy = std::max(lo.y - pad, 0); wy <= std::min(hi.y + pad, wf.height - 1); ++wy) {
    for (int wx = std::max(lo.x - pad, 0); wx <= std::min(hi.x + pad, wf.width - 1); ++wx) {
      if (!map.occupied({wx, wy})) continue;
      const Vec2 oc = wf.cell_center({wx, wy});
      const CellIndex flo = frame.world_to_cell({oc.x - inflation, oc.y - inflation});
      const CellIndex fhi = frame.world_to_cell({oc.x + inflation, oc.y + inflation});
      for (int y = std::max(flo.y, 0); y <= std::min(fhi.y, frame.height - 1); ++y)
        for (int x = std::max(flo.x, 0); x <= std::min(fhi.x, frame.width - 1); ++x)
          if ((frame.cell_center({x, y}) - oc).norm_sq() <= r_sq) mask[frame.index({x, y})] = 1;
    }
  }
  InflatedObstacle obstacle;
  obstacle.kind = InflatedObstacle::Kind::kStatic;
  obstacle.cells = mask_to_cells(frame, mask);
  return obstacle;
}

Vec2 choose_local_goal(const RobotState& robot, const std::vector<Track>& offending,
                       const StaticMap& map, double r_goal) {
  if (offending.empty())
    throw std::invalid_argument("choose_local_goal: needs at least one offending track");

  // Retreat against the approach motion, into space the walkers are
  // leaving, rather than fleeing along their travel direction.
  Vec2 mean{};
  for (const Track& t : offending) {
    const double d = std::max(distance(t.position(), robot.position), 1e-6);
    mean += t.velocity().normalized() / d;
  }
  if (mean.norm() > 1e-6) {
    return robot.position - mean.normalized() * r_goal;
  }

  // A standing track carries no motion direction: back straight away from it.
  if (offending.front().velocity().norm() < 1e-6) {
    const Vec2 away = (robot.position - offending.front().position()).normalized();
    return robot.position + away * r_goal;
  }

  // Opposed approach directions cancel: take the perpendicular with more
  // room to the static map.
  const Vec2 perp = offending.front().velocity().normalized().perp();
  auto clearance = [&](const Vec2& p) {
    const GridFrame& f = map.frame();
    double best = kInf;
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x)
        if (map.occupied({x, y}))
          best = std::min(best, (f.cell_center({x, y}) - p).norm());
    return best;
  };
  const Vec2 a = robot.position + perp * r_goal;
  const Vec2 b = robot.position - perp * r_goal;
  return clearance(a) >= clearance(b) ? a : b;
}

double PotentialMap::u_at(const Vec2& p) const {
  const CellIndex c = frame_.world_to_cell(p);
  if (!frame_.in_bounds(c)) throw std::out_of_range("u_at: point outside potential map");
  return u(c);
}

PotentialMap build_potential(const GridFrame& frame,
                             const std::vector<InflatedObstacle>& obstacles, const Vec2& goal,
                             const FieldParams& params) {
  if (params.alpha < 0.0 || params.beta < 0.0)
    throw std::invalid_argument("build_potential: alpha and beta must be >= 0");
  if (params.d0 <= 0.0) throw std::invalid_argument("build_potential: d0 must be > 0");
  if (!frame.contains(goal))
    throw std::invalid_argument("build_potential: goal outside map bounds");

  PotentialMap map;
  map.frame_ = frame;
  map.goal_ = goal;
  map.params_ = params;
  map.claimed_.assign(frame.size(), 0);
  for (const InflatedObstacle& obstacle : obstacles)
    for (const CellIndex c : obstacle.cells)
      if (frame.in_bounds(c)) map.claimed_[frame.index(c)] = 1;

  const std::vector<double> d_sq = edt_squared(map.claimed_, frame.width, frame.height);
  // With no obstacle anywhere, distances saturate at the window diagonal.
  const double d_max =
      std::hypot(frame.width * frame.resolution, frame.height * frame.resolution) + params.d0;

  map.u_.resize(frame.size());
  map.dist_.resize(frame.size());
  map.feasible_.resize(frame.size());
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const std::size_t i = frame.index({x, y});
      const double d =
          d_sq[i] == kInf ? d_max : std::sqrt(d_sq[i]) * frame.resolution;
      const Vec2 center = frame.cell_center({x, y});
      const double u_att = 0.5 * params.alpha * (center - goal).norm_sq();
      double u_rep = 0.0;
      if (d <= 0.0) {
        u_rep = params.u_cap;
      } else if (d <= params.d0) {
        u_rep = std::min(0.5 * params.beta * std::pow(1.0 / d - 1.0 / params.d0, 2.0),
                         params.u_cap);
      }
      map.dist_[i] = d;
      map.u_[i] = u_att + u_rep;
      map.feasible_[i] = map.u_[i] <= params.threshold ? 1 : 0;
    }
  }
  return map;
}

double distance_to_obstacles(const PotentialMap& map, const Vec2& x) {
  const CellIndex c = map.frame().world_to_cell(x);
  if (!map.frame().in_bounds(c))
    throw std::out_of_range("distance_to_obstacles: point outside map");
  return map.dist(c);
}

}  // namespace yieldnav
