#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "yieldnav/potential.hpp"
#include "yieldnav/rng.hpp"

namespace yieldnav {

struct ScoreWeights {
  double safe{1.0};
  double dist{0.2};
  double pot{0.05};
  double hyst{0.3};
};

struct Candidate {
  Vec2 point{};
  double q_score{0.0};
  // components kept for audit: clearance, start distance, potential, jump
  double s{0.0};
  double d{0.0};
  double u{0.0};
  double h{0.0};
};

struct AvoidanceDecision {
  std::vector<Candidate> candidates;
  Candidate selected{};
  std::optional<Vec2> x_prev;
  ScoreWeights weights{};
  std::uint64_t rng_state{0};
};

// True iff every cell the segment [a, b] geometrically enters is feasible.
// Leaving the map counts as infeasible.
bool segment_feasible(const PotentialMap& map, const Vec2& a, const Vec2& b);

// Draws n_samples uniform points over the map bounds and keeps those landing
// in feasible cells with a feasible direct segment from x_start. May return
// an empty list.
std::vector<Vec2> sample_candidates(const PotentialMap& map, const Vec2& x_start, int n_samples,
                                    Rng& rng);

// Every feasible cell center reachable by a feasible direct segment from
// x_start; exhaustive stand-in for sample_candidates in oracle checks.
std::vector<Vec2> enumerate_candidates(const PotentialMap& map, const Vec2& x_start);

// Q(x) = safe*S - dist*D - pot*U - hyst*H, with H = 0 when no previous
// avoidance point exists.
Candidate score_candidate(const Vec2& x, const Vec2& x_start, const std::optional<Vec2>& x_prev,
                          const PotentialMap& map, const ScoreWeights& weights);

// Scores an explicit candidate set and picks the argmax (ties: smallest D,
// then lexicographic point order). nullopt on an empty set.
std::optional<AvoidanceDecision> select_from_candidates(const PotentialMap& map,
                                                        const Vec2& x_start,
                                                        const std::optional<Vec2>& x_prev,
                                                        const ScoreWeights& weights,
                                                        const std::vector<Vec2>& points);

// Samples, scores, and picks the argmax. nullopt when no candidate
// survives; the caller holds position and re-plans next tick.
std::optional<AvoidanceDecision> select_avoidance_point(const PotentialMap& map,
                                                        const Vec2& x_start,
                                                        const std::optional<Vec2>& x_prev,
                                                        const ScoreWeights& weights,
                                                        int n_samples, Rng& rng);

}  // namespace yieldnav
