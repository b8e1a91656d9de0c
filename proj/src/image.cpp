#include "yieldnav/image.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace yieldnav {

namespace {

void write_binary(const std::string& path, const std::string& header, const void* data,
                  std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image '" + path + "'");
  out << header;
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

}  // namespace

void ImageGray::save_pgm(const std::string& path) const {
  write_binary(path,
               "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n",
               pixels.data(), pixels.size());
}

void ImageRgb::save_ppm(const std::string& path) const {
  write_binary(path,
               "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n",
               pixels.data(), pixels.size() * 3);
}

ImageGray tsdf_to_gray(const TsdfGrid& grid) {
  const GridFrame& f = grid.frame();
  ImageGray img(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const TsdfCell& c = grid.cell({x, y});
      std::uint8_t v = 230;  // unobserved
      if (c.weight > 0.0) {
        v = static_cast<std::uint8_t>(
            std::clamp(128.0 + 127.0 * c.tsdf / grid.params().truncation, 0.0, 255.0));
      }
      img.set(x, f.height - 1 - y, v);  // north up
    }
  return img;
}

ImageGray potential_to_gray(const PotentialMap& field) {
  const GridFrame& f = field.frame();
  ImageGray img(f.width, f.height);
  const double scale = 128.0 / field.params().threshold;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const double u = field.u({x, y});
      img.set(x, f.height - 1 - y,
              static_cast<std::uint8_t>(std::min(255.0, std::round(u * scale))));
    }
  return img;
}

ImageGray feasible_to_gray(const PotentialMap& field) {
  const GridFrame& f = field.frame();
  ImageGray img(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) img.set(x, f.height - 1 - y, field.feasible({x, y}) ? 255 : 0);
  return img;
}

namespace {

struct PlotFrame {
  Vec2 origin{};
  double resolution{0.05};
  int cells_w{0};
  int cells_h{0};
  int scale{4};

  int width() const { return cells_w * scale; }
  int height() const { return cells_h * scale; }
  // world point to pixel, y flipped so north is up
  std::pair<int, int> to_px(const Vec2& p) const {
    const double cx = (p.x - origin.x) / resolution * scale;
    const double cy = (p.y - origin.y) / resolution * scale;
    return {static_cast<int>(std::floor(cx)), height() - 1 - static_cast<int>(std::floor(cy))};
  }
};

void draw_segment(ImageRgb& img, const PlotFrame& pf, const Vec2& a, const Vec2& b,
                  ImageRgb::Color color) {
  const double len = distance(a, b);
  const int steps = std::max(1, static_cast<int>(std::ceil(len / pf.resolution * pf.scale * 2)));
  for (int i = 0; i <= steps; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / steps);
    const auto [x, y] = pf.to_px(p);
    img.set(x, y, color);
  }
}

void draw_marker(ImageRgb& img, const PlotFrame& pf, const Vec2& p, int half,
                 ImageRgb::Color color) {
  const auto [cx, cy] = pf.to_px(p);
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx) img.set(cx + dx, cy + dy, color);
}

ImageRgb::Color mode_color(const std::string& mode) {
  if (mode == "navigating") return {60, 170, 80};
  if (mode == "avoiding") return {220, 60, 60};
  if (mode == "recovering") return {235, 160, 40};
  return {70, 110, 220};  // idle
}

Vec2 vec_of(const nlohmann::json& arr) { return {arr[0].get<double>(), arr[1].get<double>()}; }

}  // namespace

std::vector<std::string> emit_plots(const RunTrace& trace, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "'");

  const nlohmann::json& header = trace.header;
  const auto& map = header.at("map");
  PlotFrame pf;
  pf.origin = vec_of(map.at("origin"));
  pf.resolution = map.at("resolution").get<double>();
  const auto& rows = map.at("rows");
  pf.cells_h = static_cast<int>(rows.size());
  pf.cells_w = static_cast<int>(rows[0].get<std::string>().size());
  pf.scale = std::clamp(800 / std::max(pf.cells_w, pf.cells_h), 1, 8);

  ImageRgb img(pf.width(), pf.height(), {250, 250, 250});
  for (int ry = 0; ry < pf.cells_h; ++ry) {
    const std::string row = rows[ry].get<std::string>();
    for (int rx = 0; rx < pf.cells_w; ++rx) {
      if (row[rx] != '#') continue;
      for (int dy = 0; dy < pf.scale; ++dy)
        for (int dx = 0; dx < pf.scale; ++dx)
          img.set(rx * pf.scale + dx, ry * pf.scale + dy, {45, 45, 45});
    }
  }

  // agent traces under the robot path
  std::map<int, Vec2> last_agent_pos;
  for (const auto& rec : trace.records) {
    if (rec.value("type", "") != "tick") continue;
    for (const auto& a : rec.at("agents")) {
      if (!a.at("active").get<bool>()) continue;
      const int id = a.at("id").get<int>();
      const Vec2 p{a.at("x").get<double>(), a.at("y").get<double>()};
      if (auto it = last_agent_pos.find(id); it != last_agent_pos.end())
        draw_segment(img, pf, it->second, p, {165, 165, 180});
      last_agent_pos[id] = p;
    }
  }

  std::optional<Vec2> prev_pos;
  std::optional<Vec2> start_pos;
  std::vector<Vec2> avoidance_points;
  for (const auto& rec : trace.records) {
    if (rec.value("type", "") != "tick") continue;
    const Vec2 p{rec.at("robot").at("x").get<double>(), rec.at("robot").at("y").get<double>()};
    if (!start_pos) start_pos = p;
    if (prev_pos) draw_segment(img, pf, *prev_pos, p, mode_color(rec.at("mode")));
    prev_pos = p;
    if (rec.contains("decision"))
      avoidance_points.push_back(vec_of(rec.at("decision").at("selected")));
  }
  for (const Vec2& p : avoidance_points) draw_marker(img, pf, p, 1, {150, 40, 160});
  if (start_pos) draw_marker(img, pf, *start_pos, 2, {0, 0, 0});
  if (!header.at("robot").at("goal").is_null())
    draw_marker(img, pf, vec_of(header.at("robot").at("goal")), 2, {20, 120, 20});

  std::vector<std::string> written;
  const fs::path dir(out_dir);
  img.save_ppm((dir / "path.ppm").string());
  written.push_back("path.ppm");

  int snapshot = 0;
  for (const auto& rec : trace.records) {
    if (rec.value("type", "") != "field") continue;
    const int w = rec.at("width").get<int>();
    const int h = rec.at("height").get<int>();
    const std::string& u_hex = rec.at("u_hex").get_ref<const std::string&>();
    const std::string& feas = rec.at("feasible").get_ref<const std::string&>();
    ImageGray u_img(w, h), f_img(w, h);
    auto nibble = [](char c) {
      return c <= '9' ? c - '0' : c - 'a' + 10;
    };
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        u_img.set(x, h - 1 - y,
                  static_cast<std::uint8_t>(nibble(u_hex[2 * i]) * 16 + nibble(u_hex[2 * i + 1])));
        f_img.set(x, h - 1 - y, feas[i] == '1' ? 255 : 0);
      }
    char name[32];
    std::snprintf(name, sizeof(name), "field_%03d.pgm", snapshot);
    u_img.save_pgm((dir / name).string());
    written.emplace_back(name);
    std::snprintf(name, sizeof(name), "feasible_%03d.pgm", snapshot);
    f_img.save_pgm((dir / name).string());
    written.emplace_back(name);
    ++snapshot;
  }
  return written;
}

}  // namespace yieldnav
