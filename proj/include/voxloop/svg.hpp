// Minimal self-contained SVG line plots for trajectories and curves.

#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace voxloop {

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<Eigen::Vector2d> points;
};

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series, int width = 640, int height = 480,
                    bool equal_axes = false);

}  // namespace voxloop
