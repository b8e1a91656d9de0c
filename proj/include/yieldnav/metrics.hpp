#pragma once

#include <optional>

#include <json.hpp>

#include "yieldnav/trace.hpp"

namespace yieldnav {

struct Metrics {
  std::optional<double> min_separation;   // closest robot-agent center distance
  std::optional<double> human_deviation;  // max agent deviation from its script path
  std::optional<double> task_time;        // to goal, or to the recovered pose
  std::optional<double> recovery_error;   // final pose vs first saved pose
  int collisions{0};                      // ticks with separation below footprint sum
  bool deadlock{false};
  bool nofeasible_persisted{false};
  int ticks{0};
  double duration{0.0};

  nlohmann::json to_json() const;
};

// Recomputes all metrics from a trace alone; replaying a trace yields the
// same numbers the run reported.
Metrics compute_metrics(const RunTrace& trace);

}  // namespace yieldnav
