#include "yieldnav/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace yieldnav {

namespace {

using nlohmann::json;

json vec_json(const Vec2& v) { return json::array({v.x, v.y}); }

// Quantized grayscale of the potential for trace snapshots: the feasibility
// threshold maps to 128.
std::string potential_hex(const PotentialMap& field) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(field.u_cells().size() * 2);
  const double scale = 128.0 / field.params().threshold;
  for (const double u : field.u_cells()) {
    const int v = std::min(255, static_cast<int>(std::lround(u * scale)));
    out.push_back(digits[(v >> 4) & 0xf]);
    out.push_back(digits[v & 0xf]);
  }
  return out;
}

std::string feasible_bits(const PotentialMap& field) {
  std::string out;
  out.reserve(field.feasible_cells().size());
  for (const std::uint8_t f : field.feasible_cells()) out.push_back(f ? '1' : '0');
  return out;
}

}  // namespace

Pipeline::Pipeline(Scenario scenario, bool avoidance_enabled)
    : scenario_(std::move(scenario)),
      avoidance_enabled_(avoidance_enabled),
      rng_scan_(Rng(scenario_.seed).fork("scan")),
      rng_select_(Rng(scenario_.seed).fork("select")) {
  world_.map = scenario_.map;
  world_.agents = scenario_.agents;
  world_.robot = scenario_.robot_start;
  world_.limits = scenario_.limits;
  nav_goal_ = scenario_.nav_goal;

  TsdfParams tsdf_params;
  tsdf_params.truncation = scenario_.tsdf_truncation();
  tsdf_params.omega_new = scenario_.params.tsdf_omega_new;
  tsdf_params.omega_max = scenario_.params.tsdf_omega_max;
  tsdf_params.n_free = scenario_.params.tsdf_n_free;
  tsdf_ = TsdfGrid(scenario_.map.frame(), tsdf_params);
  tracker_ = Tracker(scenario_.params.tracker);
  total_ticks_ = static_cast<int>(std::lround(scenario_.duration / scenario_.tick));

  json agents = json::array();
  for (const auto& a : scenario_.agents) {
    json waypoints = json::array();
    for (const auto& w : a.waypoints) waypoints.push_back(vec_json(w.position));
    const char* behavior = a.behavior == AgentBehavior::kLoop
                               ? "loop"
                               : (a.behavior == AgentBehavior::kOnce ? "once" : "hold_at_end");
    agents.push_back({{"id", a.id},
                      {"radius", a.shape_radius},
                      {"behavior", behavior},
                      {"waypoints", waypoints}});
  }
  json rows = json::array();
  const GridFrame& mf = scenario_.map.frame();
  for (int y = mf.height - 1; y >= 0; --y) {
    std::string row(mf.width, '.');
    for (int x = 0; x < mf.width; ++x)
      if (scenario_.map.occupied({x, y})) row[x] = '#';
    rows.push_back(row);
  }
  header_ = {{"type", "header"},
             {"version", 1},
             {"scenario", scenario_.name},
             {"seed", scenario_.seed},
             {"avoidance", avoidance_enabled_},
             {"tick", scenario_.tick},
             {"duration", scenario_.duration},
             {"map",
              {{"resolution", mf.resolution},
               {"origin", vec_json(mf.origin)},
               {"rows", rows}}},
             {"robot",
              {{"start", vec_json(scenario_.robot_start.position)},
               {"heading", scenario_.robot_start.heading},
               {"footprint_radius", scenario_.robot_start.footprint_radius},
               {"v_max", scenario_.limits.v_max},
               {"omega_max", scenario_.limits.omega_max},
               {"goal", nav_goal_ ? vec_json(*nav_goal_) : json(nullptr)}}},
             {"agents", agents},
             {"params", params_to_json(scenario_.params)}};
}

PotentialMap Pipeline::build_field(const Vec2& goal_point, bool with_dynamic,
                                   double horizon_boost) {
  const RunParams& p = scenario_.params;
  const GridFrame window =
      field_window(scenario_.map.frame(), world_.robot.position, p.field.window);
  const double inflation = world_.robot.footprint_radius + p.field.margin;

  std::vector<InflatedObstacle> obstacles;
  obstacles.push_back(inflate_static(window, scenario_.map, inflation));
  if (with_dynamic) {
    for (const Track& t : tracker_.tracks()) {
      obstacles.push_back(sweep_dilate(window, t, p.field.horizon + horizon_boost,
                                       p.field.predict_step, inflation,
                                       p.tracker.process_noise));
    }
  }
  // keep the attractive anchor inside the window
  const Vec2 hi = window.max_corner();
  const double inset = window.resolution;
  const Vec2 goal{std::clamp(goal_point.x, window.origin.x + inset, hi.x - inset),
                  std::clamp(goal_point.y, window.origin.y + inset, hi.y - inset)};
  return build_potential(window, obstacles, goal, p.field);
}

std::optional<LocalPlan> Pipeline::plan_towards(const PotentialMap& field, const Vec2& target) {
  const GridFrame& f = field.frame();
  const Vec2 hi = f.max_corner();
  const double inset = f.resolution;
  Vec2 carrot{std::clamp(target.x, f.origin.x + inset, hi.x - inset),
              std::clamp(target.y, f.origin.y + inset, hi.y - inset)};
  if (!field.feasible_at(carrot)) {
    // snap to the nearest feasible cell center
    double best = std::numeric_limits<double>::infinity();
    std::optional<Vec2> snapped;
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) {
        if (!field.feasible({x, y})) continue;
        const Vec2 c = f.cell_center({x, y});
        const double d = (c - carrot).norm_sq();
        if (d < best) {
          best = d;
          snapped = c;
        }
      }
    if (!snapped) return std::nullopt;
    carrot = *snapped;
  }
  return plan_local(field, world_.robot, carrot, /*allow_reverse=*/true,
                    scenario_.params.pilot, world_.limits);
}

// Route out of an infeasible pocket the hazard envelope swept over the
// robot. Exits are cells that stay feasible under a much longer sweep, so
// space the mover is about to claim never attracts the walk; among exits of
// similar depth the one most against the approach motion wins, keeping the
// slip-out on the upstream side. Breadth-first from the robot across
// non-wall terrain.
std::optional<LocalPlan> Pipeline::escape_plan(const Vec2& field_goal) {
  const PotentialMap lookahead = build_field(field_goal, /*with_dynamic=*/true,
                                             /*horizon_boost=*/2.5);
  const GridFrame& f = lookahead.frame();
  const CellIndex start = f.world_to_cell(world_.robot.position);
  if (!f.in_bounds(start)) return std::nullopt;

  auto is_wall = [&](CellIndex c) { return scenario_.map.occupied_at(f.cell_center(c)); };

  Vec2 upstream{};
  for (const Track& t : tracker_.tracks()) {
    const double d = std::max(distance(t.position(), world_.robot.position), 1e-6);
    upstream += t.velocity().normalized() / d;
  }
  upstream = (upstream * -1.0).normalized();

  // exits within one footprint of the nearest exit tie-break on the
  // upstream dot; anything farther never wins on direction alone
  const int extra_layers = static_cast<int>(std::ceil(0.2 / f.resolution));
  std::vector<int> parent(f.size(), -2);
  std::vector<int> depth(f.size(), 0);
  std::deque<int> queue;
  const int start_i = static_cast<int>(f.index(start));
  parent[start_i] = -1;
  queue.push_back(start_i);

  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  int found_depth = -1;
  std::vector<int> exits;
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    if (found_depth >= 0 && depth[i] > found_depth + extra_layers) break;
    const CellIndex c{i % f.width, i / f.width};
    if (lookahead.feasible(c) && i != start_i) {
      if (found_depth < 0) found_depth = depth[i];
      exits.push_back(i);
      continue;  // stop expanding past an exit
    }
    for (int k = 0; k < 8; ++k) {
      const CellIndex nb{c.x + kDx[k], c.y + kDy[k]};
      if (!f.in_bounds(nb) || is_wall(nb)) continue;
      const int nb_i = static_cast<int>(f.index(nb));
      if (parent[nb_i] != -2) continue;
      parent[nb_i] = i;
      depth[nb_i] = depth[i] + 1;
      queue.push_back(nb_i);
    }
  }
  if (exits.empty()) return std::nullopt;

  // nearest exit by euclidean reach; the upstream dot only breaks near-ties
  double best_reach = std::numeric_limits<double>::infinity();
  for (const int i : exits) {
    const CellIndex c{i % f.width, i / f.width};
    best_reach = std::min(best_reach, distance(f.cell_center(c), world_.robot.position));
  }
  int best_seed = -1;
  double best_dot = -2.0;
  for (const int i : exits) {
    const CellIndex c{i % f.width, i / f.width};
    const Vec2 offset = f.cell_center(c) - world_.robot.position;
    if (offset.norm() > best_reach + 0.1) continue;
    const double along = offset.normalized().dot(upstream);
    if (along > best_dot + 1e-12) {
      best_dot = along;
      best_seed = i;
    }
  }

  // walk the parents back and take the farthest wall-free chord, pushed
  // outward so the follower has something to chase
  std::vector<CellIndex> path;
  for (int i = best_seed; i != -1; i = parent[i]) path.push_back({i % f.width, i / f.width});
  std::reverse(path.begin(), path.end());  // robot ... seed
  const Vec2 seed = f.cell_center(path.back());
  Vec2 dir = seed - world_.robot.position;
  if (dir.norm() < 1e-9) return std::nullopt;
  dir = dir.normalized();
  double stride = 0.0;
  march_ray(f, world_.robot.position, dir, std::max(0.6, dir.dot(seed - world_.robot.position)),
            [&](CellIndex c, double t_entry) {
              if (is_wall(c)) return false;
              stride = std::max(stride, t_entry + f.resolution);
              return true;
            });
  stride = std::min(stride, std::max(0.6, distance(seed, world_.robot.position)));
  if (stride < 1e-6) return std::nullopt;
  const Vec2 target = world_.robot.position + dir * stride;
  const Vec2 seg = target - world_.robot.position;

  LocalPlan plan;
  plan.waypoints = {world_.robot.position, target};
  const double seg_dir = std::atan2(seg.y, seg.x);
  const int direction =
      std::abs(wrap_angle(seg_dir - world_.robot.heading)) > M_PI / 2.0 ? -1 : 1;
  plan.directions = {direction};
  plan.speeds = {world_.limits.v_max};
  plan.estimated_duration = seg.norm() / world_.limits.v_max;
  return plan;
}

Pipeline::ControlOutput Pipeline::control(const RiskAssessment& risk, bool entered_avoiding) {
  const RunParams& p = scenario_.params;
  ControlOutput out;

  switch (pilot_.mode) {
    case PilotMode::kIdle:
      last_field_.reset();
      break;
    case PilotMode::kNavigating: {
      // field and plan were prepared during risk assessment
      if (nav_plan_) {
        out.command = follow(*nav_plan_, world_.robot, p.pilot, world_.limits).command;
      }
      break;
    }
    case PilotMode::kAvoiding: {
      Vec2 field_goal{};
      if (pilot_.saved && pilot_.saved->kind == SavedContext::Kind::kGoal) {
        field_goal = pilot_.saved->position;
      } else {
        std::vector<Track> offending;
        for (const Track& t : tracker_.tracks())
          if (std::binary_search(risk.offending.begin(), risk.offending.end(), t.id))
            offending.push_back(t);
        if (!offending.empty()) {
          last_local_goal_ =
              choose_local_goal(world_.robot, offending, scenario_.map, p.field.r_goal);
        }
        field_goal = last_local_goal_.value_or(world_.robot.position);
      }
      PotentialMap field = build_field(field_goal, /*with_dynamic=*/true);
      out.decision = select_avoidance_point(field, world_.robot.position,
                                            pilot_.active_avoidance_point, p.weights,
                                            p.n_samples, rng_select_);
      bool commanded = false;
      if (out.decision) {
        pilot_.active_avoidance_point = out.decision->selected.point;
        if (auto plan = plan_towards(field, out.decision->selected.point)) {
          out.command = follow(*plan, world_.robot, p.pilot, world_.limits).command;
          commanded = true;
        }
      } else {
        out.no_feasible = true;
      }
      if (!commanded && !field.feasible_at(world_.robot.position)) {
        // The hazard envelope has swept over the robot; holding here would
        // freeze it inside the conflict. Slip out to the nearest safe cell
        // and re-select once clear.
        if (auto escape = escape_plan(field_goal)) {
          PilotParams urgent = p.pilot;
          urgent.align_tolerance = 1.2;  // move out while still turning
          out.command = follow(*escape, world_.robot, urgent, world_.limits).command;
        }
      }
      last_field_ = std::move(field);
      if (entered_avoiding && last_field_) {
        records_.push_back({{"type", "field"},
                            {"t", world_.time},
                            {"resolution", last_field_->frame().resolution},
                            {"origin", vec_json(last_field_->frame().origin)},
                            {"width", last_field_->frame().width},
                            {"height", last_field_->frame().height},
                            {"u_hex", potential_hex(*last_field_)},
                            {"feasible", feasible_bits(*last_field_)}});
      }
      break;
    }
    case PilotMode::kRecovering: {
      PotentialMap field = build_field(pilot_.saved->position, /*with_dynamic=*/true);
      if (auto plan = plan_towards(field, pilot_.saved->position)) {
        out.command = follow(*plan, world_.robot, p.pilot, world_.limits).command;
      }
      last_field_ = std::move(field);
      break;
    }
  }
  return out;
}

void Pipeline::tick() {
  const RunParams& p = scenario_.params;
  const double dt = scenario_.tick;

  // sense
  const SensorFrame frame =
      cast_scan(world_, p.beam_count, p.max_range, p.noise, rng_scan_);

  // detect against the free-space labels standing from previous frames
  const DynamicPointSet dyn = tsdf_.label_dynamic(frame);
  int tp = 0, fp = 0;
  std::vector<bool> labeled(frame.points.size(), false);
  for (const std::size_t i : dyn.frame_indices) {
    labeled[i] = true;
    if (frame.sources[i] >= 0)
      ++tp;
    else
      ++fp;
  }
  int fn = 0;
  for (std::size_t i = 0; i < frame.points.size(); ++i)
    if (frame.sources[i] >= 0 && !labeled[i]) ++fn;

  tsdf_.integrate_frame(frame, dyn.frame_indices);
  tsdf_.refresh_free_space();

  // track
  const std::vector<Cluster> clusters =
      cluster_points(dyn.points, p.tracker.cluster_delta, p.tracker.min_pts);
  tracker_.step(clusters, dt);

  // task bookkeeping: goal arrival ends navigation
  bool goal_reached_now = false;
  if (nav_goal_ && pilot_.mode != PilotMode::kAvoiding &&
      pilot_.mode != PilotMode::kRecovering &&
      distance(world_.robot.position, *nav_goal_) <= p.pilot.arrive_eps) {
    goal_reached_now = true;
    nav_goal_.reset();
  }

  // risk: idle uses the robot position, navigating the remaining route;
  // with a context saved, the way back to it must also stay clear or the
  // return would start before the conflict has actually passed
  route_for_risk_.clear();
  nav_plan_.reset();
  const bool base_navigating = nav_goal_ && pilot_.mode != PilotMode::kAvoiding &&
                               pilot_.mode != PilotMode::kRecovering;
  if (base_navigating) {
    PotentialMap nav_field = build_field(*nav_goal_, /*with_dynamic=*/false);
    nav_plan_ = plan_towards(nav_field, *nav_goal_);
    if (nav_plan_) route_for_risk_ = nav_plan_->waypoints;
    last_field_ = std::move(nav_field);
  } else if (pilot_.saved) {
    route_for_risk_ = {pilot_.saved->position};
  }
  RiskAssessment risk;
  if (avoidance_enabled_) {
    risk = assess_risk(world_.robot, tracker_.tracks(), route_for_risk_, p.pilot.risk_horizon,
                       dt, p.pilot.d_conflict, p.tracker.process_noise);
  }

  const PilotMode prev_mode = pilot_.mode;
  pilot_ = transition(pilot_, risk.risk, world_.robot, nav_goal_, dt, p.pilot);
  const bool entered_avoiding = pilot_.mode == PilotMode::kAvoiding && prev_mode != pilot_.mode;

  const ControlOutput ctrl = control(risk, entered_avoiding);

  // record the tick at time t with the command chosen at t
  json tracks = json::array();
  for (const Track& t : tracker_.tracks()) {
    tracks.push_back({{"id", t.id},
                      {"x", t.state[0]},
                      {"y", t.state[1]},
                      {"vx", t.state[2]},
                      {"vy", t.state[3]},
                      {"bbox", json::array({t.bbox.min.x, t.bbox.min.y, t.bbox.max.x,
                                            t.bbox.max.y})},
                      {"age", t.age},
                      {"missed", t.missed}});
  }
  json agents = json::array();
  for (const auto& a : world_.agents) {
    const auto pos = agent_position(a, world_.time);
    agents.push_back({{"id", a.id},
                      {"active", pos.has_value()},
                      {"x", pos ? pos->x : 0.0},
                      {"y", pos ? pos->y : 0.0}});
  }
  json rec = {{"type", "tick"},
              {"i", tick_index_},
              {"t", world_.time},
              {"robot",
               {{"x", world_.robot.position.x},
                {"y", world_.robot.position.y},
                {"heading", world_.robot.heading},
                {"v", world_.robot.linear_velocity},
                {"w", world_.robot.angular_velocity}}},
              {"mode", to_string(pilot_.mode)},
              {"risk", risk.risk},
              {"offending", risk.offending},
              {"agents", agents},
              {"tracks", tracks},
              {"detect",
               {{"points", frame.points.size()},
                {"dyn", dyn.points.size()},
                {"tp", tp},
                {"fp", fp},
                {"fn", fn}}},
              {"command", {{"v", ctrl.command.linear}, {"w", ctrl.command.angular}}},
              {"clear_timer", pilot_.clear_timer},
              {"no_feasible", ctrl.no_feasible}};
  if (pilot_.saved) {
    rec["saved"] = {{"kind", pilot_.saved->kind == SavedContext::Kind::kPose ? "pose" : "goal"},
                    {"x", pilot_.saved->position.x},
                    {"y", pilot_.saved->position.y}};
  } else {
    rec["saved"] = nullptr;
  }
  if (goal_reached_now) rec["goal_reached"] = true;
  if (ctrl.decision) {
    const AvoidanceDecision& d = *ctrl.decision;
    rec["decision"] = {{"selected", vec_json(d.selected.point)},
                       {"q", d.selected.q_score},
                       {"s", d.selected.s},
                       {"d", d.selected.d},
                       {"u", d.selected.u},
                       {"h", d.selected.h},
                       {"n_candidates", d.candidates.size()},
                       {"x_prev", d.x_prev ? vec_json(*d.x_prev) : json(nullptr)}};
  }
  records_.push_back(std::move(rec));

  // act
  world_.command = ctrl.command;
  world_ = step_world(world_, dt);
  ++tick_index_;
}

RunTrace Pipeline::trace() const {
  RunTrace t;
  t.header = header_;
  t.records = records_;
  return t;
}

RunTrace run_scenario(const Scenario& scenario, bool avoidance_enabled) {
  Pipeline pipeline(scenario, avoidance_enabled);
  pipeline.run_all();
  return pipeline.trace();
}

int exit_code_for(const Metrics& metrics, bool strict_collisions) {
  if (metrics.nofeasible_persisted) return 3;
  if (strict_collisions && metrics.collisions > 0) return 4;
  return 0;
}

}  // namespace yieldnav
