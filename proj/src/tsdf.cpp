#include "yieldnav/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace yieldnav {

double truncate_sdf(double sdf, double truncation) {
  if (truncation <= 0.0) throw std::invalid_argument("truncate_sdf: truncation must be > 0");
  return std::clamp(sdf, -truncation, truncation);
}

FusedCell fuse_cell(double tsdf_prev, double weight_prev, double tsdf_new, double omega_new) {
  if (weight_prev < 0.0) throw std::invalid_argument("fuse_cell: prior weight must be >= 0");
  if (omega_new <= 0.0) throw std::invalid_argument("fuse_cell: omega_new must be > 0");
  const double weight = weight_prev + omega_new;
  return {(tsdf_prev * weight_prev + tsdf_new * omega_new) / weight, weight};
}

TsdfGrid::TsdfGrid(const GridFrame& frame, TsdfParams params)
    : frame_(frame), params_(params), cells_(frame), observed_(frame.size(), 0) {
  if (params_.truncation <= frame.resolution)
    throw std::invalid_argument("tsdf truncation must exceed one cell");
}

void TsdfGrid::integrate_frame(const SensorFrame& frame,
                               const std::vector<std::size_t>& dynamic_indices) {
  const Vec2 sensor = frame.sensor_position;
  if (!frame_.contains(sensor))
    throw std::out_of_range("integrate_frame: sensor pose outside grid bounds");

  std::fill(observed_.begin(), observed_.end(), 0);
  const double tau = params_.truncation;
  // Cells whose center lies closer to the surface than one cell may contain
  // it; they count as occupied for free-space purposes.
  const double free_band = frame_.resolution;

  std::vector<bool> is_dynamic(frame.points.size(), false);
  for (const std::size_t i : dynamic_indices)
    if (i < is_dynamic.size()) is_dynamic[i] = true;

  for (std::size_t pi = 0; pi < frame.points.size(); ++pi) {
    const Vec2 delta = frame.points[pi] - sensor;
    const double hit_range = delta.norm();
    if (hit_range <= 0.0) continue;
    const Vec2 dir = delta / hit_range;
    const bool dynamic = is_dynamic[pi];
    march_ray(frame_, sensor, dir, hit_range + tau, [&](CellIndex c, double) {
      const double along = (frame_.cell_center(c) - sensor).dot(dir);
      const double sdf = hit_range - along;
      if (sdf < -tau) return false;  // past the truncation band behind the hit
      if (dynamic && sdf < free_band) return false;  // stop short of an intruder
      TsdfCell& cell = cells_.at(c);
      const auto fused = fuse_cell(cell.tsdf, cell.weight, truncate_sdf(sdf, tau),
                                   params_.omega_new);
      cell.tsdf = fused.tsdf;
      cell.weight = std::min(fused.weight, params_.omega_max);
      std::uint8_t& obs = observed_[frame_.index(c)];
      obs = sdf >= free_band ? std::max<std::uint8_t>(obs, 1) : 2;
      return true;
    });
  }
  for (const double angle : frame.miss_angles) {
    march_ray(frame_, sensor, heading_vec(angle), frame.max_range, [&](CellIndex c, double) {
      std::uint8_t& obs = observed_[frame_.index(c)];
      obs = std::max<std::uint8_t>(obs, 1);
      return true;
    });
  }

  for (std::size_t i = 0; i < observed_.size(); ++i) {
    if (observed_[i] == 2) {
      cells_.cells()[i].free_streak = 0;
    } else if (observed_[i] == 1) {
      ++cells_.cells()[i].free_streak;
    }
  }
}

void TsdfGrid::refresh_free_space() {
  for (int y = 0; y < frame_.height; ++y) {
    for (int x = 0; x < frame_.width; ++x) {
      TsdfCell& cell = cells_.at({x, y});
      bool free = cell.free_streak >= params_.n_free;
      for (int dy = -1; free && dy <= 1; ++dy) {
        for (int dx = -1; free && dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const CellIndex n{x + dx, y + dy};
          if (frame_.in_bounds(n) && cells_.at(n).tsdf < 0.0) free = false;
        }
      }
      cell.high_conf_free = free;
    }
  }
}

DynamicPointSet TsdfGrid::label_dynamic(const SensorFrame& frame) const {
  DynamicPointSet out;
  out.timestamp = frame.timestamp;
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    const CellIndex c = frame_.world_to_cell(frame.points[i]);
    if (frame_.in_bounds(c) && cells_.at(c).high_conf_free) {
      out.points.push_back(frame.points[i]);
      out.frame_indices.push_back(i);
    }
  }
  return out;
}

}  // namespace yieldnav
