#include "voxloop/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace voxloop {

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series, int width, int height,
                    bool equal_axes) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write svg: " + path);

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      if (first) {
        xmin = xmax = p.x();
        ymin = ymax = p.y();
        first = false;
      }
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  if (equal_axes) {
    const double span = std::max(xmax - xmin, ymax - ymin);
    const double xc = 0.5 * (xmin + xmax), yc = 0.5 * (ymin + ymax);
    xmin = xc - span / 2;
    xmax = xc + span / 2;
    ymin = yc - span / 2;
    ymax = yc + span / 2;
  }

  const double margin = 50;
  const double pw = width - 2 * margin, ph = height - 2 * margin;
  auto px = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return height - margin - (y - ymin) / (ymax - ymin) * ph; };

  std::fprintf(f,
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
               "viewBox=\"0 0 %d %d\">\n",
               width, height, width, height);
  std::fprintf(f, "<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width, height);
  std::fprintf(f, "<text x=\"%d\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">%s</text>\n",
               width / 2 - static_cast<int>(title.size()) * 4, title.c_str());
  // axes
  std::fprintf(f,
               "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#333\"/>\n",
               margin, height - margin, width - margin, height - margin);
  std::fprintf(f, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#333\"/>\n",
               margin, margin, margin, height - margin);
  std::fprintf(f,
               "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
               "fill=\"#333\">%.3g</text>\n",
               margin - 8, height - margin + 16, xmin);
  std::fprintf(f,
               "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
               "fill=\"#333\">%.3g</text>\n",
               width - margin - 16, height - margin + 16, xmax);
  std::fprintf(f,
               "<text x=\"4\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
               "fill=\"#333\">%.3g</text>\n",
               height - margin, ymin);
  std::fprintf(f,
               "<text x=\"4\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
               "fill=\"#333\">%.3g</text>\n",
               margin + 4, ymax);

  int legend_y = 40;
  for (const auto& s : series) {
    if (s.points.empty()) continue;
    std::fprintf(f, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"",
                 s.color.c_str());
    for (const auto& p : s.points) std::fprintf(f, "%.2f,%.2f ", px(p.x()), py(p.y()));
    std::fprintf(f, "\"/>\n");
    std::fprintf(f,
                 "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\" "
                 "fill=\"%s\">%s</text>\n",
                 width - 170, legend_y, s.color.c_str(), s.label.c_str());
    legend_y += 16;
  }
  std::fprintf(f, "</svg>\n");
  std::fclose(f);
}

}  // namespace voxloop
