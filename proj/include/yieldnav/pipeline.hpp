#pragma once

#include <optional>

#include "yieldnav/metrics.hpp"
#include "yieldnav/pilot.hpp"
#include "yieldnav/scenario.hpp"
#include "yieldnav/selector.hpp"
#include "yieldnav/trace.hpp"
#include "yieldnav/tsdf.hpp"

namespace yieldnav {

// One scenario run: the sense -> detect -> track -> field -> select -> pilot
// loop, single-threaded, one pass per tick. The trace is a pure function of
// (scenario, seed, avoidance flag).
class Pipeline {
 public:
  Pipeline(Scenario scenario, bool avoidance_enabled);

  void tick();
  bool done() const { return tick_index_ >= total_ticks_; }
  void run_all() {
    while (!done()) tick();
  }

  const World& world() const { return world_; }
  const TsdfGrid& tsdf() const { return tsdf_; }
  const Tracker& tracker() const { return tracker_; }
  const PilotState& pilot() const { return pilot_; }
  const std::optional<PotentialMap>& last_field() const { return last_field_; }

  RunTrace trace() const;

 private:
  struct ControlOutput {
    VelocityCommand command{};
    bool no_feasible{false};
    std::optional<AvoidanceDecision> decision;
  };

  ControlOutput control(const RiskAssessment& risk, bool entered_avoiding);
  PotentialMap build_field(const Vec2& goal_point, bool with_dynamic, double horizon_boost = 0.0);
  std::optional<LocalPlan> plan_towards(const PotentialMap& field, const Vec2& target);
  std::optional<LocalPlan> escape_plan(const Vec2& field_goal);

  Scenario scenario_;
  bool avoidance_enabled_;
  World world_;
  TsdfGrid tsdf_;
  Tracker tracker_;
  PilotState pilot_;
  std::optional<Vec2> nav_goal_;
  Rng rng_scan_;
  Rng rng_select_;

  int tick_index_{0};
  int total_ticks_{0};
  std::optional<Vec2> last_local_goal_;
  std::optional<PotentialMap> last_field_;
  std::vector<Vec2> route_for_risk_;
  std::optional<LocalPlan> nav_plan_;

  nlohmann::json header_;
  std::vector<nlohmann::json> records_;
};

// Runs a scenario to completion and returns the trace.
RunTrace run_scenario(const Scenario& scenario, bool avoidance_enabled);

// Exit-code policy shared by the CLI: 0 ok, 3 when NoFeasiblePoint persisted
// past its window, 4 for collisions when strict is set.
int exit_code_for(const Metrics& metrics, bool strict_collisions);

}  // namespace yieldnav
