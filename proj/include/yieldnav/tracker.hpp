#pragma once

#include <array>
#include <vector>

#include "yieldnav/geom.hpp"

namespace yieldnav {

struct Cluster {
  std::vector<Vec2> points;
  Vec2 centroid{};
  Aabb bbox{};
};

// Connected components of the graph joining points within `delta`, with
// components smaller than min_pts discarded as noise. The partition is
// independent of input order: points inside a cluster are sorted
// lexicographically and clusters are ordered by their first point.
std::vector<Cluster> cluster_points(const std::vector<Vec2>& points, double delta, int min_pts);

// One tracked moving object. State is (x, y, vx, vy); covariance is a
// row-major 4x4 kept symmetric PSD by the filter.
struct Track {
  int id{0};
  std::array<double, 4> state{};
  std::array<double, 16> covariance{};
  Aabb bbox{};
  int age{0};
  int missed{0};

  Vec2 position() const { return {state[0], state[1]}; }
  Vec2 velocity() const { return {state[2], state[3]}; }
};

struct TrackerParams {
  double cluster_delta{0.3};
  int min_pts{3};
  double match_threshold{0.6};
  int max_missed{5};
  double process_noise{0.01};  // added to P as process_noise * dt * I
  double meas_noise{0.02};     // position measurement variance
  double init_pos_var{0.02};
  double init_vel_var{1.0};  // velocity is unobservable from one frame
};

// Constant-velocity prediction over dt.
void kf_predict(Track& track, double dt, double process_noise);

// Position-only linear update (Joseph form). A non-finite measurement is
// rejected and reported by returning false.
bool kf_update(Track& track, const Vec2& measurement, double meas_noise);

// Positions from repeated prediction without updates, sampled at
// step, 2*step, ... up to horizon.
std::vector<Vec2> predict_path(const Track& track, double horizon, double step,
                               double process_noise);

struct Association {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (cluster, track) index pairs
  std::vector<std::size_t> unmatched_clusters;
  std::vector<std::size_t> unmatched_tracks;
};

// Greedy globally-nearest pairing on centroid distance: repeatedly commit
// the smallest remaining distance at or below the threshold.
Association associate(const std::vector<Cluster>& clusters, const std::vector<Track>& tracks,
                      double match_threshold);

class Tracker {
 public:
  Tracker() = default;
  explicit Tracker(TrackerParams params) : params_(params) {}

  const TrackerParams& params() const { return params_; }
  const std::vector<Track>& tracks() const { return tracks_; }

  // One tracking cycle: predict every track dt forward, associate the new
  // clusters, update matches, spawn tracks for unmatched clusters, and drop
  // tracks missing longer than max_missed frames.
  void step(const std::vector<Cluster>& clusters, double dt);

 private:
  TrackerParams params_{};
  std::vector<Track> tracks_;
  int next_id_{0};
};

}  // namespace yieldnav
