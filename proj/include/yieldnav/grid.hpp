#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "yieldnav/geom.hpp"

namespace yieldnav {

struct CellIndex {
  int x{0};
  int y{0};
  bool operator==(const CellIndex& o) const { return x == o.x && y == o.y; }
  bool operator<(const CellIndex& o) const { return y != o.y ? y < o.y : x < o.x; }
};

// Geometry shared by every grid in the project. `origin` is the world
// position of the minimum corner of cell (0,0); cell centers sit at
// origin + (i + 0.5) * resolution.
struct GridFrame {
  double resolution{0.05};
  Vec2 origin{};
  int width{0};
  int height{0};

  bool in_bounds(CellIndex c) const {
    return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
  }
  bool contains(const Vec2& p) const { return in_bounds(world_to_cell(p)); }

  CellIndex world_to_cell(const Vec2& p) const {
    return {static_cast<int>(std::floor((p.x - origin.x) / resolution)),
            static_cast<int>(std::floor((p.y - origin.y) / resolution))};
  }
  Vec2 cell_center(CellIndex c) const {
    return {origin.x + (c.x + 0.5) * resolution, origin.y + (c.y + 0.5) * resolution};
  }
  Vec2 max_corner() const {
    return {origin.x + width * resolution, origin.y + height * resolution};
  }
  std::size_t index(CellIndex c) const {
    return static_cast<std::size_t>(c.y) * width + c.x;
  }
  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
};

template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(GridFrame frame, T fill = T{}) : frame_(frame), cells_(frame.size(), fill) {}

  const GridFrame& frame() const { return frame_; }
  T& at(CellIndex c) {
    assert(frame_.in_bounds(c));
    return cells_[frame_.index(c)];
  }
  const T& at(CellIndex c) const {
    assert(frame_.in_bounds(c));
    return cells_[frame_.index(c)];
  }
  std::vector<T>& cells() { return cells_; }
  const std::vector<T>& cells() const { return cells_; }
  void fill(const T& v) { cells_.assign(cells_.size(), v); }

 private:
  GridFrame frame_{};
  std::vector<T> cells_;
};

// Visits every cell the ray from `start` along unit direction `dir` passes
// through, in order, up to parameter max_t (meters). The visitor receives the
// cell and the ray parameter at which the ray enters it; returning false
// stops the walk. Cells outside the frame are skipped, but the walk
// continues so rays may re-enter.
inline void march_ray(const GridFrame& f, const Vec2& start, const Vec2& dir, double max_t,
                      const std::function<bool(CellIndex, double)>& visit) {
  CellIndex cell = f.world_to_cell(start);
  const int step_x = dir.x > 0.0 ? 1 : (dir.x < 0.0 ? -1 : 0);
  const int step_y = dir.y > 0.0 ? 1 : (dir.y < 0.0 ? -1 : 0);

  const double inf = std::numeric_limits<double>::infinity();
  auto boundary_t = [&](int c, double o, double s, double d, int step) {
    if (step == 0) return inf;
    const double edge = o + (step > 0 ? (c + 1) : c) * f.resolution;
    return (edge - s) / d;
  };
  double t_max_x = boundary_t(cell.x, f.origin.x, start.x, dir.x, step_x);
  double t_max_y = boundary_t(cell.y, f.origin.y, start.y, dir.y, step_y);
  const double t_delta_x = step_x != 0 ? f.resolution / std::abs(dir.x) : inf;
  const double t_delta_y = step_y != 0 ? f.resolution / std::abs(dir.y) : inf;

  double t_entry = 0.0;
  while (t_entry <= max_t) {
    if (f.in_bounds(cell)) {
      if (!visit(cell, t_entry)) return;
    }
    if (t_max_x < t_max_y) {
      t_entry = t_max_x;
      t_max_x += t_delta_x;
      cell.x += step_x;
    } else if (t_max_y < t_max_x) {
      t_entry = t_max_y;
      t_max_y += t_delta_y;
      cell.y += step_y;
    } else {
      // Exact corner crossing: the segment enters the diagonal cell only.
      if (t_max_x == inf) return;  // zero-length or axis-degenerate ray ended
      t_entry = t_max_x;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
      cell.x += step_x;
      cell.y += step_y;
    }
  }
}

// All cells the segment [a, b] geometrically enters, in traversal order.
inline std::vector<CellIndex> segment_cells(const GridFrame& f, const Vec2& a, const Vec2& b) {
  std::vector<CellIndex> out;
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len == 0.0) {
    const CellIndex c = f.world_to_cell(a);
    if (f.in_bounds(c)) out.push_back(c);
    return out;
  }
  march_ray(f, a, d / len, len, [&](CellIndex c, double) {
    out.push_back(c);
    return true;
  });
  return out;
}

}  // namespace yieldnav
