#pragma once

#include <cstdint>
#include <vector>

#include "yieldnav/grid.hpp"
#include "yieldnav/world.hpp"

namespace yieldnav {

// Clamps a signed distance into [-truncation, +truncation].
double truncate_sdf(double sdf, double truncation);

// Weighted running average of a cell's signed distance. Returns the fused
// value and the summed weight; a zero-weight prior is simply overwritten.
struct FusedCell {
  double tsdf;
  double weight;
};
FusedCell fuse_cell(double tsdf_prev, double weight_prev, double tsdf_new, double omega_new);

struct TsdfCell {
  double tsdf{0.0};
  double weight{0.0};
  int free_streak{0};
  bool high_conf_free{false};
};

struct TsdfParams {
  double truncation{0.15};  // defaults to 3x resolution when built from a frame
  double omega_new{1.0};
  double omega_max{100.0};  // weight cap; keeps stale surfaces from pinning the map
  int n_free{5};            // consecutive free frames before a cell counts as free space
};

// Points the detector labeled dynamic on one frame. frame_indices maps each
// point back to its position in the triggering SensorFrame.
struct DynamicPointSet {
  double timestamp{0.0};
  std::vector<Vec2> points;
  std::vector<std::size_t> frame_indices;
};

// Incremental truncated signed distance grid over the static map's frame.
// Per frame: label_dynamic() is evaluated against the labels standing from
// previous frames, then integrate_frame() folds the new observations in and
// refresh_free_space() recomputes the labels.
class TsdfGrid {
 public:
  TsdfGrid() = default;
  TsdfGrid(const GridFrame& frame, TsdfParams params);

  const GridFrame& frame() const { return frame_; }
  const TsdfParams& params() const { return params_; }
  const TsdfCell& cell(CellIndex c) const { return cells_.at(c); }
  TsdfCell& cell(CellIndex c) { return cells_.at(c); }

  // Folds one sensor frame into the grid. Cells along each beam receive
  // truncated signed-distance observations (positive in front of the hit,
  // negative behind). A cell seen clearly in front of every surface this
  // frame gains one free_streak; a cell holding or hiding a surface resets
  // to zero. Beams without a return carve free space only.
  //
  // Points at the indices in dynamic_indices are treated as intruders, not
  // surfaces: their beams carve free space up to the hit but write no
  // surface band, so a mover never poisons the free space it passes through.
  // Throws std::out_of_range if the sensor pose is outside the grid.
  void integrate_frame(const SensorFrame& frame,
                       const std::vector<std::size_t>& dynamic_indices = {});

  // Recomputes high_conf_free: free_streak >= n_free and no 8-neighbor
  // currently carries a negative (surface/interior) distance.
  void refresh_free_space();

  // Points of `frame` falling inside currently high-confidence-free cells.
  DynamicPointSet label_dynamic(const SensorFrame& frame) const;

 private:
  GridFrame frame_{};
  TsdfParams params_{};
  Grid<TsdfCell> cells_;
  std::vector<std::uint8_t> observed_;  // per-frame scratch: 1 free, 2 occupied
};

}  // namespace yieldnav
