#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "yieldnav/potential.hpp"
#include "yieldnav/trace.hpp"
#include "yieldnav/tsdf.hpp"

namespace yieldnav {

struct ImageGray {
  int width{0};
  int height{0};
  std::vector<std::uint8_t> pixels;

  ImageGray() = default;
  ImageGray(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  void set(int x, int y, std::uint8_t v) {
    if (x >= 0 && x < width && y >= 0 && y < height)
      pixels[static_cast<std::size_t>(y) * width + x] = v;
  }
  void save_pgm(const std::string& path) const;  // binary P5
};

struct ImageRgb {
  using Color = std::array<std::uint8_t, 3>;
  int width{0};
  int height{0};
  std::vector<Color> pixels;

  ImageRgb() = default;
  ImageRgb(int w, int h, Color fill)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  void set(int x, int y, Color c) {
    if (x >= 0 && x < width && y >= 0 && y < height)
      pixels[static_cast<std::size_t>(y) * width + x] = c;
  }
  void save_ppm(const std::string& path) const;  // binary P6
};

ImageGray tsdf_to_gray(const TsdfGrid& grid);
ImageGray potential_to_gray(const PotentialMap& field);
ImageGray feasible_to_gray(const PotentialMap& field);

// Renders the run: path.ppm (robot path colored by mode, agent paths,
// avoidance points) plus field_NNN.pgm / feasible_NNN.pgm for every
// potential-field snapshot in the trace. Byte-stable for identical traces.
// Returns the file names written.
std::vector<std::string> emit_plots(const RunTrace& trace, const std::string& out_dir);

}  // namespace yieldnav
