#pragma once

#include <string>
#include <vector>

namespace carleman {

// One polyline of a plot.  x and y must have equal length; non-finite
// entries (and non-positive ones on a log axis) split the line into
// segments rather than being drawn.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 480;
};

// Renders a self-contained SVG line plot (axes, ticks, legend, polylines).
// The output depends only on the inputs, byte for byte.
std::string render_line_plot(const std::vector<PlotSeries>& series,
                             const PlotOptions& opt);

}  // namespace carleman
