#include "yieldnav/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace yieldnav {

namespace {

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

bool lex_less(const Vec2& a, const Vec2& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; }

using Mat4 = std::array<double, 16>;

Mat4 mat_mul(const Mat4& a, const Mat4& b) {
  Mat4 r{};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      const double aik = a[i * 4 + k];
      for (int j = 0; j < 4; ++j) r[i * 4 + j] += aik * b[k * 4 + j];
    }
  return r;
}

Mat4 mat_transpose(const Mat4& a) {
  Mat4 r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r[j * 4 + i] = a[i * 4 + j];
  return r;
}

void symmetrize(Mat4& p) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const double m = 0.5 * (p[i * 4 + j] + p[j * 4 + i]);
      p[i * 4 + j] = m;
      p[j * 4 + i] = m;
    }
}

}  // namespace

std::vector<Cluster> cluster_points(const std::vector<Vec2>& points, double delta, int min_pts) {
  if (delta <= 0.0) throw std::invalid_argument("cluster_points: delta must be > 0");
  const std::size_t n = points.size();
  DisjointSet ds(n);
  const double delta_sq = delta * delta;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((points[i] - points[j]).norm_sq() <= delta_sq) ds.unite(i, j);

  std::vector<std::vector<Vec2>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[ds.find(i)].push_back(points[i]);

  std::vector<Cluster> out;
  for (auto& g : groups) {
    if (static_cast<int>(g.size()) < min_pts || g.empty()) continue;
    std::sort(g.begin(), g.end(), lex_less);
    Cluster c;
    c.points = std::move(g);
    Vec2 sum{};
    c.bbox = {c.points.front(), c.points.front()};
    for (const Vec2& p : c.points) {
      sum += p;
      c.bbox.min = {std::min(c.bbox.min.x, p.x), std::min(c.bbox.min.y, p.y)};
      c.bbox.max = {std::max(c.bbox.max.x, p.x), std::max(c.bbox.max.y, p.y)};
    }
    c.centroid = sum / static_cast<double>(c.points.size());
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const Cluster& a, const Cluster& b) { return lex_less(a.points.front(), b.points.front()); });
  return out;
}

void kf_predict(Track& track, double dt, double process_noise) {
  if (dt < 0.0) throw std::invalid_argument("kf_predict: dt must be >= 0");
  track.state[0] += track.state[2] * dt;
  track.state[1] += track.state[3] * dt;

  Mat4 f{};
  for (int i = 0; i < 4; ++i) f[i * 4 + i] = 1.0;
  f[0 * 4 + 2] = dt;
  f[1 * 4 + 3] = dt;
  Mat4 p = mat_mul(mat_mul(f, track.covariance), mat_transpose(f));
  for (int i = 0; i < 4; ++i) p[i * 4 + i] += process_noise * dt;
  symmetrize(p);
  track.covariance = p;
}

bool kf_update(Track& track, const Vec2& measurement, double meas_noise) {
  if (!std::isfinite(measurement.x) || !std::isfinite(measurement.y)) return false;

  const Mat4& p = track.covariance;
  // S = H P H^T + R with H selecting (x, y)
  const double s00 = p[0] + meas_noise;
  const double s01 = p[1];
  const double s10 = p[4];
  const double s11 = p[5] + meas_noise;
  const double det = s00 * s11 - s01 * s10;
  if (det == 0.0) return false;
  const double i00 = s11 / det, i01 = -s01 / det, i10 = -s10 / det, i11 = s00 / det;

  // K = P H^T S^-1, one 4x2 block
  std::array<double, 8> k{};
  for (int i = 0; i < 4; ++i) {
    const double ph0 = p[i * 4 + 0];
    const double ph1 = p[i * 4 + 1];
    k[i * 2 + 0] = ph0 * i00 + ph1 * i10;
    k[i * 2 + 1] = ph0 * i01 + ph1 * i11;
  }

  const double inno_x = measurement.x - track.state[0];
  const double inno_y = measurement.y - track.state[1];
  for (int i = 0; i < 4; ++i) track.state[i] += k[i * 2 + 0] * inno_x + k[i * 2 + 1] * inno_y;

  // Joseph form: P = (I - K H) P (I - K H)^T + K R K^T
  Mat4 ikh{};
  for (int i = 0; i < 4; ++i) ikh[i * 4 + i] = 1.0;
  for (int i = 0; i < 4; ++i) {
    ikh[i * 4 + 0] -= k[i * 2 + 0];
    ikh[i * 4 + 1] -= k[i * 2 + 1];
  }
  Mat4 updated = mat_mul(mat_mul(ikh, track.covariance), mat_transpose(ikh));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      updated[i * 4 + j] += meas_noise * (k[i * 2 + 0] * k[j * 2 + 0] + k[i * 2 + 1] * k[j * 2 + 1]);
  symmetrize(updated);
  track.covariance = updated;
  return true;
}

std::vector<Vec2> predict_path(const Track& track, double horizon, double step,
                               double process_noise) {
  if (horizon <= 0.0 || step <= 0.0)
    throw std::invalid_argument("predict_path: horizon and step must be > 0");
  Track scratch = track;
  std::vector<Vec2> path;
  const int n = static_cast<int>(std::floor(horizon / step + 1e-9));
  path.reserve(n);
  for (int i = 0; i < n; ++i) {
    kf_predict(scratch, step, process_noise);
    path.push_back(scratch.position());
  }
  return path;
}

Association associate(const std::vector<Cluster>& clusters, const std::vector<Track>& tracks,
                      double match_threshold) {
  if (match_threshold <= 0.0)
    throw std::invalid_argument("associate: match_threshold must be > 0");

  struct Pair {
    double dist;
    std::size_t cluster;
    std::size_t track;
  };
  std::vector<Pair> pairs;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci)
    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
      const double d = distance(clusters[ci].centroid, tracks[ti].position());
      if (d <= match_threshold) pairs.push_back({d, ci, ti});
    }
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (tracks[a.track].id != tracks[b.track].id) return tracks[a.track].id < tracks[b.track].id;
    return a.cluster < b.cluster;
  });

  Association out;
  std::vector<bool> cluster_used(clusters.size(), false);
  std::vector<bool> track_used(tracks.size(), false);
  for (const Pair& p : pairs) {
    if (cluster_used[p.cluster] || track_used[p.track]) continue;
    cluster_used[p.cluster] = true;
    track_used[p.track] = true;
    out.matches.emplace_back(p.cluster, p.track);
  }
  for (std::size_t ci = 0; ci < clusters.size(); ++ci)
    if (!cluster_used[ci]) out.unmatched_clusters.push_back(ci);
  for (std::size_t ti = 0; ti < tracks.size(); ++ti)
    if (!track_used[ti]) out.unmatched_tracks.push_back(ti);
  return out;
}

void Tracker::step(const std::vector<Cluster>& clusters, double dt) {
  for (Track& t : tracks_) {
    kf_predict(t, dt, params_.process_noise);
    ++t.age;
  }
  const Association assoc = associate(clusters, tracks_, params_.match_threshold);
  for (const auto& [ci, ti] : assoc.matches) {
    Track& t = tracks_[ti];
    if (kf_update(t, clusters[ci].centroid, params_.meas_noise)) {
      t.bbox = clusters[ci].bbox;
      t.missed = 0;
    } else {
      ++t.missed;
    }
  }
  for (const std::size_t ti : assoc.unmatched_tracks) ++tracks_[ti].missed;
  for (const std::size_t ci : assoc.unmatched_clusters) {
    Track t;
    t.id = next_id_++;
    t.state = {clusters[ci].centroid.x, clusters[ci].centroid.y, 0.0, 0.0};
    t.covariance = {};
    t.covariance[0] = params_.init_pos_var;
    t.covariance[5] = params_.init_pos_var;
    t.covariance[10] = params_.init_vel_var;
    t.covariance[15] = params_.init_vel_var;
    t.bbox = clusters[ci].bbox;
    tracks_.push_back(t);
  }
  std::erase_if(tracks_, [&](const Track& t) { return t.missed > params_.max_missed; });
}

}  // namespace yieldnav
