#include "yieldnav/selector.hpp"

#include <stdexcept>

namespace yieldnav {

bool segment_feasible(const PotentialMap& map, const Vec2& a, const Vec2& b) {
  const GridFrame& f = map.frame();
  if (!f.contains(a) || !f.contains(b)) return false;
  bool ok = true;
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len == 0.0) return map.feasible(f.world_to_cell(a));
  march_ray(f, a, d / len, len, [&](CellIndex c, double) {
    if (!map.feasible(c)) {
      ok = false;
      return false;
    }
    return true;
  });
  return ok;
}

std::vector<Vec2> sample_candidates(const PotentialMap& map, const Vec2& x_start, int n_samples,
                                    Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("sample_candidates: n_samples must be >= 1");
  const GridFrame& f = map.frame();
  if (!f.contains(x_start))
    throw std::invalid_argument("sample_candidates: x_start outside map");
  const Vec2 hi = f.max_corner();
  std::vector<Vec2> out;
  for (int i = 0; i < n_samples; ++i) {
    const Vec2 p{rng.uniform(f.origin.x, hi.x), rng.uniform(f.origin.y, hi.y)};
    if (map.feasible_at(p) && segment_feasible(map, x_start, p)) out.push_back(p);
  }
  return out;
}

std::vector<Vec2> enumerate_candidates(const PotentialMap& map, const Vec2& x_start) {
  const GridFrame& f = map.frame();
  std::vector<Vec2> out;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      if (!map.feasible({x, y})) continue;
      const Vec2 p = f.cell_center({x, y});
      if (segment_feasible(map, x_start, p)) out.push_back(p);
    }
  return out;
}

Candidate score_candidate(const Vec2& x, const Vec2& x_start, const std::optional<Vec2>& x_prev,
                          const PotentialMap& map, const ScoreWeights& weights) {
  Candidate c;
  c.point = x;
  c.s = distance_to_obstacles(map, x);
  c.d = distance(x, x_start);
  c.u = map.u_at(x);
  c.h = x_prev ? distance(x, *x_prev) : 0.0;
  c.q_score = weights.safe * c.s - weights.dist * c.d - weights.pot * c.u - weights.hyst * c.h;
  return c;
}

namespace {

// argmax on q, ties by smaller start distance then lexicographic point
bool better(const Candidate& a, const Candidate& b) {
  if (a.q_score != b.q_score) return a.q_score > b.q_score;
  if (a.d != b.d) return a.d < b.d;
  if (a.point.x != b.point.x) return a.point.x < b.point.x;
  return a.point.y < b.point.y;
}

}  // namespace

std::optional<AvoidanceDecision> select_from_candidates(const PotentialMap& map,
                                                        const Vec2& x_start,
                                                        const std::optional<Vec2>& x_prev,
                                                        const ScoreWeights& weights,
                                                        const std::vector<Vec2>& points) {
  if (points.empty()) return std::nullopt;
  AvoidanceDecision decision;
  decision.x_prev = x_prev;
  decision.weights = weights;
  decision.candidates.reserve(points.size());
  for (const Vec2& p : points) {
    decision.candidates.push_back(score_candidate(p, x_start, x_prev, map, weights));
    if (decision.candidates.size() == 1 ||
        better(decision.candidates.back(), decision.selected)) {
      decision.selected = decision.candidates.back();
    }
  }
  return decision;
}

std::optional<AvoidanceDecision> select_avoidance_point(const PotentialMap& map,
                                                        const Vec2& x_start,
                                                        const std::optional<Vec2>& x_prev,
                                                        const ScoreWeights& weights,
                                                        int n_samples, Rng& rng) {
  const std::uint64_t state_before = rng.state();
  auto decision =
      select_from_candidates(map, x_start, x_prev, weights,
                             sample_candidates(map, x_start, n_samples, rng));
  if (decision) decision->rng_state = state_before;
  return decision;
}

}  // namespace yieldnav
