#include "yieldnav/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "yieldnav/geom.hpp"

namespace yieldnav {

namespace {

Vec2 vec_of(const nlohmann::json& arr) { return {arr[0].get<double>(), arr[1].get<double>()}; }

}  // namespace

nlohmann::json Metrics::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return nlohmann::json{{"min_separation", opt(min_separation)},
                        {"human_deviation", opt(human_deviation)},
                        {"task_time", opt(task_time)},
                        {"recovery_error", opt(recovery_error)},
                        {"collisions", collisions},
                        {"deadlock", deadlock},
                        {"nofeasible_persisted", nofeasible_persisted},
                        {"ticks", ticks},
                        {"duration", duration}};
}

Metrics compute_metrics(const RunTrace& trace) {
  if (trace.records.empty()) throw std::runtime_error("compute_metrics: trace has no records");
  const nlohmann::json& header = trace.header;

  std::map<int, double> agent_radius;
  std::map<int, std::vector<Vec2>> agent_script;
  for (const auto& a : header.at("agents")) {
    agent_radius[a.at("id").get<int>()] = a.at("radius").get<double>();
    std::vector<Vec2> poly;
    for (const auto& w : a.at("waypoints")) poly.push_back(vec_of(w));
    agent_script[a.at("id").get<int>()] = poly;
  }
  const double footprint = header.at("robot").at("footprint_radius").get<double>();
  const double tick = header.at("tick").get<double>();
  const double nofeasible_window = header.at("params").at("nofeasible_window").get<double>();
  const double deadlock_window = header.at("params").at("deadlock_window").get<double>();
  const double progress_eps = header.at("params").at("progress_eps").get<double>();

  Metrics m;
  m.duration = header.at("duration").get<double>();

  double min_sep = std::numeric_limits<double>::infinity();
  double max_dev = -1.0;
  std::optional<Vec2> first_saved_pose;
  std::optional<double> goal_time;
  std::optional<double> last_recovered_time;
  std::string prev_mode;
  Vec2 last_pos{};
  double nofeas_run = 0.0;

  struct NavSample {
    double t;
    Vec2 pos;
  };
  std::vector<NavSample> nav_run;  // current contiguous run of navigating ticks

  auto check_deadlock = [&](std::vector<NavSample>& run) {
    for (std::size_t i = 0; i < run.size() && !m.deadlock; ++i) {
      double max_disp = 0.0;
      bool window_complete = false;
      for (std::size_t j = i + 1; j < run.size(); ++j) {
        max_disp = std::max(max_disp, distance(run[j].pos, run[i].pos));
        if (run[j].t - run[i].t >= deadlock_window) {
          window_complete = true;
          break;
        }
      }
      if (window_complete && max_disp < progress_eps) m.deadlock = true;
    }
    run.clear();
  };

  for (const auto& rec : trace.records) {
    if (rec.value("type", "") != "tick") continue;
    ++m.ticks;
    const double t = rec.at("t").get<double>();
    const Vec2 pos{rec.at("robot").at("x").get<double>(), rec.at("robot").at("y").get<double>()};
    last_pos = pos;

    bool collided = false;
    for (const auto& a : rec.at("agents")) {
      if (!a.at("active").get<bool>()) continue;
      const int id = a.at("id").get<int>();
      const Vec2 ap{a.at("x").get<double>(), a.at("y").get<double>()};
      const double sep = distance(pos, ap);
      min_sep = std::min(min_sep, sep);
      if (sep < footprint + agent_radius.at(id)) collided = true;
      const auto& poly = agent_script.at(id);
      double dev = 0.0;
      if (poly.size() == 1) {
        dev = distance(ap, poly.front());
      } else {
        dev = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < poly.size(); ++i)
          dev = std::min(dev, point_segment_distance(ap, poly[i], poly[i + 1]));
      }
      max_dev = std::max(max_dev, dev);
    }
    if (collided) ++m.collisions;

    const std::string mode = rec.at("mode").get<std::string>();
    if (!first_saved_pose && rec.contains("saved") && !rec.at("saved").is_null() &&
        rec.at("saved").at("kind") == "pose") {
      first_saved_pose = Vec2{rec.at("saved").at("x").get<double>(),
                              rec.at("saved").at("y").get<double>()};
    }
    if (!goal_time && rec.value("goal_reached", false)) goal_time = t;
    if (prev_mode == "recovering" && mode == "idle") last_recovered_time = t;
    prev_mode = mode;

    if (mode == "navigating") {
      nav_run.push_back({t, pos});
    } else {
      check_deadlock(nav_run);
    }

    if (rec.value("no_feasible", false)) {
      nofeas_run += tick;
      if (nofeas_run > nofeasible_window) m.nofeasible_persisted = true;
    } else {
      nofeas_run = 0.0;
    }
  }
  check_deadlock(nav_run);

  if (std::isfinite(min_sep)) m.min_separation = min_sep;
  if (max_dev >= 0.0) m.human_deviation = max_dev;
  if (goal_time) {
    m.task_time = goal_time;
  } else if (last_recovered_time) {
    m.task_time = last_recovered_time;
  }
  if (first_saved_pose) m.recovery_error = distance(last_pos, *first_saved_pose);
  return m;
}

}  // namespace yieldnav
