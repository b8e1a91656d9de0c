#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "yieldnav/pilot.hpp"
#include "yieldnav/potential.hpp"
#include "yieldnav/selector.hpp"
#include "yieldnav/tracker.hpp"
#include "yieldnav/tsdf.hpp"
#include "yieldnav/world.hpp"

namespace yieldnav {

// Invalid scenario content. `field` names the offending entry.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Every tunable default in one place; any of them can be overridden from a
// scenario's "params" table.
struct RunParams {
  int beam_count{360};
  double max_range{8.0};
  SensorNoise noise{};

  double tsdf_truncation{-1.0};  // <= 0 resolves to 3x map resolution
  double tsdf_omega_new{1.0};
  double tsdf_omega_max{100.0};
  int tsdf_n_free{5};

  TrackerParams tracker{};
  FieldParams field{};
  ScoreWeights weights{};
  int n_samples{200};
  PilotParams pilot{};

  double nofeasible_window{2.0};  // seconds of NoFeasiblePoint before giving up
  double deadlock_window{5.0};    // seconds without progress while navigating
  double progress_eps{0.05};
};

struct Scenario {
  int version{1};
  std::string name;
  StaticMap map;
  RobotState robot_start;
  KinematicLimits limits;
  std::optional<Vec2> nav_goal;
  std::vector<AgentScript> agents;
  double duration{10.0};
  double tick{0.1};
  std::uint64_t seed{1};
  RunParams params;

  double tsdf_truncation() const {
    return params.tsdf_truncation > 0.0 ? params.tsdf_truncation
                                        : 3.0 * map.frame().resolution;
  }
};

// Parses and validates a scenario document. Throws ScenarioError naming the
// offending field on any schema violation.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

// The full parameter table as stored in traces (documented defaults applied).
nlohmann::json params_to_json(const RunParams& params);

}  // namespace yieldnav
