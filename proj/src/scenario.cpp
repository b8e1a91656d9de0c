#include "yieldnav/scenario.hpp"

#include <fstream>
#include <set>

namespace yieldnav {

namespace {

using nlohmann::json;

double get_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ScenarioError(where + "." + key, "missing");
  if (!obj[key].is_number()) throw ScenarioError(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

double get_number_or(const json& obj, const std::string& key, double fallback) {
  return obj.contains(key) ? obj[key].get<double>() : fallback;
}

Vec2 get_vec2(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ScenarioError(where + "." + key, "missing");
  const json& v = obj[key];
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ScenarioError(where + "." + key, "must be [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

AgentBehavior parse_behavior(const std::string& s, const std::string& where) {
  if (s == "loop") return AgentBehavior::kLoop;
  if (s == "once") return AgentBehavior::kOnce;
  if (s == "hold_at_end") return AgentBehavior::kHoldAtEnd;
  throw ScenarioError(where, "unknown behavior '" + s + "'");
}

// Applies the "params" table. Unknown keys are schema errors so typos never
// silently fall back to defaults.
void apply_params(const json& obj, RunParams& p) {
  static const std::set<std::string> known = {
      "beam_count",      "max_range",        "range_noise_std",  "jitter_xy_std",
      "jitter_heading_std", "tsdf_truncation", "tsdf_omega_new",  "tsdf_omega_max",
      "tsdf_n_free",     "cluster_delta",    "cluster_min_pts",  "match_threshold",
      "track_max_missed", "process_noise",   "meas_noise",       "init_pos_var",
      "init_vel_var",    "alpha",            "beta",             "d0",
      "u_cap",           "threshold",        "field_horizon",    "margin",
      "r_goal",          "window",           "predict_step",     "w_safe",
      "w_dist",          "w_pot",            "w_hyst",           "n_samples",
      "d_conflict",      "risk_horizon",     "t_clear",          "arrive_eps",
      "plan_pot_weight", "pursuit_gain",     "align_tolerance",  "nofeasible_window",
      "deadlock_window", "progress_eps"};
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw ScenarioError("params." + key, "unknown parameter");
    if (!value.is_number()) throw ScenarioError("params." + key, "must be a number");
  }
  p.beam_count = static_cast<int>(get_number_or(obj, "beam_count", p.beam_count));
  p.max_range = get_number_or(obj, "max_range", p.max_range);
  p.noise.range_std = get_number_or(obj, "range_noise_std", p.noise.range_std);
  p.noise.jitter_xy_std = get_number_or(obj, "jitter_xy_std", p.noise.jitter_xy_std);
  p.noise.jitter_heading_std =
      get_number_or(obj, "jitter_heading_std", p.noise.jitter_heading_std);
  p.tsdf_truncation = get_number_or(obj, "tsdf_truncation", p.tsdf_truncation);
  p.tsdf_omega_new = get_number_or(obj, "tsdf_omega_new", p.tsdf_omega_new);
  p.tsdf_omega_max = get_number_or(obj, "tsdf_omega_max", p.tsdf_omega_max);
  p.tsdf_n_free = static_cast<int>(get_number_or(obj, "tsdf_n_free", p.tsdf_n_free));
  p.tracker.cluster_delta = get_number_or(obj, "cluster_delta", p.tracker.cluster_delta);
  p.tracker.min_pts = static_cast<int>(get_number_or(obj, "cluster_min_pts", p.tracker.min_pts));
  p.tracker.match_threshold = get_number_or(obj, "match_threshold", p.tracker.match_threshold);
  p.tracker.max_missed =
      static_cast<int>(get_number_or(obj, "track_max_missed", p.tracker.max_missed));
  p.tracker.process_noise = get_number_or(obj, "process_noise", p.tracker.process_noise);
  p.tracker.meas_noise = get_number_or(obj, "meas_noise", p.tracker.meas_noise);
  p.tracker.init_pos_var = get_number_or(obj, "init_pos_var", p.tracker.init_pos_var);
  p.tracker.init_vel_var = get_number_or(obj, "init_vel_var", p.tracker.init_vel_var);
  p.field.alpha = get_number_or(obj, "alpha", p.field.alpha);
  p.field.beta = get_number_or(obj, "beta", p.field.beta);
  p.field.d0 = get_number_or(obj, "d0", p.field.d0);
  p.field.u_cap = get_number_or(obj, "u_cap", p.field.u_cap);
  p.field.threshold = get_number_or(obj, "threshold", p.field.threshold);
  p.field.horizon = get_number_or(obj, "field_horizon", p.field.horizon);
  p.field.margin = get_number_or(obj, "margin", p.field.margin);
  p.field.r_goal = get_number_or(obj, "r_goal", p.field.r_goal);
  p.field.window = get_number_or(obj, "window", p.field.window);
  p.field.predict_step = get_number_or(obj, "predict_step", p.field.predict_step);
  p.weights.safe = get_number_or(obj, "w_safe", p.weights.safe);
  p.weights.dist = get_number_or(obj, "w_dist", p.weights.dist);
  p.weights.pot = get_number_or(obj, "w_pot", p.weights.pot);
  p.weights.hyst = get_number_or(obj, "w_hyst", p.weights.hyst);
  p.n_samples = static_cast<int>(get_number_or(obj, "n_samples", p.n_samples));
  p.pilot.d_conflict = get_number_or(obj, "d_conflict", p.pilot.d_conflict);
  p.pilot.risk_horizon = get_number_or(obj, "risk_horizon", p.pilot.risk_horizon);
  p.pilot.t_clear = get_number_or(obj, "t_clear", p.pilot.t_clear);
  p.pilot.arrive_eps = get_number_or(obj, "arrive_eps", p.pilot.arrive_eps);
  p.pilot.plan_pot_weight = get_number_or(obj, "plan_pot_weight", p.pilot.plan_pot_weight);
  p.pilot.pursuit_gain = get_number_or(obj, "pursuit_gain", p.pilot.pursuit_gain);
  p.pilot.align_tolerance = get_number_or(obj, "align_tolerance", p.pilot.align_tolerance);
  p.nofeasible_window = get_number_or(obj, "nofeasible_window", p.nofeasible_window);
  p.deadlock_window = get_number_or(obj, "deadlock_window", p.deadlock_window);
  p.progress_eps = get_number_or(obj, "progress_eps", p.progress_eps);

  if (p.beam_count < 1) throw ScenarioError("params.beam_count", "must be >= 1");
  if (p.max_range <= 0) throw ScenarioError("params.max_range", "must be > 0");
  if (p.n_samples < 1) throw ScenarioError("params.n_samples", "must be >= 1");
  if (p.field.u_cap < p.field.threshold)
    throw ScenarioError("params.u_cap", "must be >= threshold so obstacles stay infeasible");
}

}  // namespace

namespace {

Scenario parse_scenario_impl(const json& doc);

}  // namespace

Scenario parse_scenario(const json& doc) {
  try {
    return parse_scenario_impl(doc);
  } catch (const json::exception& e) {
    // wrong value types surface as schema errors, not internal failures
    throw ScenarioError("$", e.what());
  }
}

namespace {

Scenario parse_scenario_impl(const json& doc) {
  Scenario s;
  if (!doc.is_object()) throw ScenarioError("$", "scenario must be a JSON object");
  if (!doc.contains("version") || !doc["version"].is_number_integer())
    throw ScenarioError("version", "missing or not an integer");
  s.version = doc["version"].get<int>();
  if (s.version != 1) throw ScenarioError("version", "unsupported schema version");
  s.name = doc.value("name", std::string("unnamed"));

  if (!doc.contains("map") || !doc["map"].is_object())
    throw ScenarioError("map", "missing or not an object");
  const json& m = doc["map"];
  const double resolution = get_number(m, "resolution", "map");
  if (resolution <= 0.0) throw ScenarioError("map.resolution", "must be > 0");
  Vec2 origin{};
  if (m.contains("origin")) origin = get_vec2(m, "origin", "map");
  std::vector<std::string> rows;
  if (m.contains("rows")) {
    if (!m["rows"].is_array() || m["rows"].empty())
      throw ScenarioError("map.rows", "must be a non-empty array of strings");
    for (const auto& r : m["rows"]) {
      if (!r.is_string()) throw ScenarioError("map.rows", "must contain strings only");
      rows.push_back(r.get<std::string>());
    }
  } else if (m.contains("rows_file")) {
    std::ifstream in(m["rows_file"].get<std::string>());
    if (!in) throw ScenarioError("map.rows_file", "cannot open file");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) rows.push_back(line);
    }
    if (rows.empty()) throw ScenarioError("map.rows_file", "file holds no rows");
  } else {
    throw ScenarioError("map.rows", "missing (provide rows or rows_file)");
  }
  try {
    s.map = StaticMap::from_rows(rows, resolution, origin);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("map.rows", e.what());
  }

  if (!doc.contains("robot") || !doc["robot"].is_object())
    throw ScenarioError("robot", "missing or not an object");
  const json& r = doc["robot"];
  s.robot_start.position = get_vec2(r, "start", "robot");
  s.robot_start.heading = get_number_or(r, "heading", 0.0);
  s.robot_start.footprint_radius = get_number_or(r, "footprint_radius", 0.2);
  s.limits.v_max = get_number_or(r, "v_max", 0.6);
  s.limits.omega_max = get_number_or(r, "omega_max", 1.5);
  if (s.robot_start.footprint_radius <= 0.0)
    throw ScenarioError("robot.footprint_radius", "must be > 0");
  if (!s.map.frame().contains(s.robot_start.position))
    throw ScenarioError("robot.start", "outside map bounds");
  if (r.contains("goal")) {
    s.nav_goal = get_vec2(r, "goal", "robot");
    if (!s.map.frame().contains(*s.nav_goal))
      throw ScenarioError("robot.goal", "outside map bounds");
  }

  if (doc.contains("agents")) {
    if (!doc["agents"].is_array()) throw ScenarioError("agents", "must be an array");
    for (std::size_t i = 0; i < doc["agents"].size(); ++i) {
      const json& a = doc["agents"][i];
      const std::string where = "agents[" + std::to_string(i) + "]";
      AgentScript script;
      script.id = static_cast<int>(get_number(a, "id", where));
      script.shape_radius = get_number(a, "radius", where);
      if (script.shape_radius <= 0.0) throw ScenarioError(where + ".radius", "must be > 0");
      script.behavior =
          parse_behavior(a.value("behavior", std::string("hold_at_end")), where + ".behavior");
      if (!a.contains("waypoints") || !a["waypoints"].is_array() || a["waypoints"].empty())
        throw ScenarioError(where + ".waypoints", "must be a non-empty array");
      double prev_time = -std::numeric_limits<double>::infinity();
      for (const auto& w : a["waypoints"]) {
        AgentWaypoint wp;
        wp.position = get_vec2(w, "position", where + ".waypoints");
        wp.time = get_number(w, "time", where + ".waypoints");
        if (wp.time <= prev_time)
          throw ScenarioError(where + ".waypoints", "times must be strictly increasing");
        if (!s.map.frame().contains(wp.position))
          throw ScenarioError(where + ".waypoints", "position outside map bounds");
        prev_time = wp.time;
        script.waypoints.push_back(wp);
      }
      s.agents.push_back(std::move(script));
    }
  }

  s.duration = get_number(doc, "duration", "$");
  if (s.duration <= 0.0) throw ScenarioError("duration", "must be > 0");
  s.tick = get_number_or(doc, "tick", 0.1);
  if (s.tick <= 0.0) throw ScenarioError("tick", "must be > 0");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer()) throw ScenarioError("seed", "must be an integer");
    s.seed = doc["seed"].get<std::uint64_t>();
  }
  s.params.field.predict_step = s.tick;
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) throw ScenarioError("params", "must be an object");
    apply_params(doc["params"], s.params);
  }
  if (s.tsdf_truncation() <= s.map.frame().resolution)
    throw ScenarioError("params.tsdf_truncation", "must exceed one map cell");
  return s;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("$", "cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

nlohmann::json params_to_json(const RunParams& p) {
  return nlohmann::json{{"beam_count", p.beam_count},
                        {"max_range", p.max_range},
                        {"range_noise_std", p.noise.range_std},
                        {"jitter_xy_std", p.noise.jitter_xy_std},
                        {"jitter_heading_std", p.noise.jitter_heading_std},
                        {"tsdf_truncation", p.tsdf_truncation},
                        {"tsdf_omega_new", p.tsdf_omega_new},
                        {"tsdf_omega_max", p.tsdf_omega_max},
                        {"tsdf_n_free", p.tsdf_n_free},
                        {"cluster_delta", p.tracker.cluster_delta},
                        {"cluster_min_pts", p.tracker.min_pts},
                        {"match_threshold", p.tracker.match_threshold},
                        {"track_max_missed", p.tracker.max_missed},
                        {"process_noise", p.tracker.process_noise},
                        {"meas_noise", p.tracker.meas_noise},
                        {"init_pos_var", p.tracker.init_pos_var},
                        {"init_vel_var", p.tracker.init_vel_var},
                        {"alpha", p.field.alpha},
                        {"beta", p.field.beta},
                        {"d0", p.field.d0},
                        {"u_cap", p.field.u_cap},
                        {"threshold", p.field.threshold},
                        {"field_horizon", p.field.horizon},
                        {"margin", p.field.margin},
                        {"r_goal", p.field.r_goal},
                        {"window", p.field.window},
                        {"predict_step", p.field.predict_step},
                        {"w_safe", p.weights.safe},
                        {"w_dist", p.weights.dist},
                        {"w_pot", p.weights.pot},
                        {"w_hyst", p.weights.hyst},
                        {"n_samples", p.n_samples},
                        {"d_conflict", p.pilot.d_conflict},
                        {"risk_horizon", p.pilot.risk_horizon},
                        {"t_clear", p.pilot.t_clear},
                        {"arrive_eps", p.pilot.arrive_eps},
                        {"plan_pot_weight", p.pilot.plan_pot_weight},
                        {"pursuit_gain", p.pilot.pursuit_gain},
                        {"align_tolerance", p.pilot.align_tolerance},
                        {"nofeasible_window", p.nofeasible_window},
                        {"deadlock_window", p.deadlock_window},
                        {"progress_eps", p.progress_eps}};
}

}  // namespace yieldnav
