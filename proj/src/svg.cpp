#include "carleman/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "carleman/util.hpp"

namespace carleman {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

struct Axis {
  bool log = false;
  double lo = 0.0;  // transformed (log10 when log) data range, padded
  double hi = 1.0;

  double transform(double v) const { return log ? std::log10(v) : v; }
  bool plottable(double v) const {
    return std::isfinite(v) && (!log || v > 0.0);
  }
  // Fraction of the way across the plot box.
  double unit(double v) const { return (transform(v) - lo) / (hi - lo); }
};

// Largest of {1, 2, 5} * 10^k not exceeding `raw`.
double nice_step(double raw) {
  if (!(raw > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  if (r >= 5.0) return 5.0 * mag;
  if (r >= 2.0) return 2.0 * mag;
  return mag;
}

Axis fit_axis(const std::vector<PlotSeries>& series, bool log, bool use_x) {
  Axis ax;
  ax.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    const auto& vals = use_x ? s.x : s.y;
    const auto& other = use_x ? s.y : s.x;
    for (std::size_t i = 0; i < vals.size() && i < other.size(); ++i) {
      if (!ax.plottable(vals[i]) || !std::isfinite(other[i])) continue;
      const double t = ax.transform(vals[i]);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  if (!(lo <= hi)) {
    lo = log ? 0.0 : 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    const double pad = std::max(0.5, std::abs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  }
  const double pad = 0.05 * (hi - lo);
  ax.lo = lo - pad;
  ax.hi = hi + pad;
  return ax;
}

// Tick positions in transformed coordinates.
std::vector<double> ticks_for(const Axis& ax) {
  std::vector<double> out;
  const double step = nice_step((ax.hi - ax.lo) / 5.0);
  double t = std::ceil(ax.lo / step) * step;
  for (; t <= ax.hi + 1e-9 * step; t += step) {
    // Snap near-zero accumulation error so the label reads 0, not 1e-17.
    out.push_back(std::abs(t) < 1e-9 * step ? 0.0 : t);
  }
  return out;
}

std::string tick_label(const Axis& ax, double t) {
  const double v = ax.log ? std::pow(10.0, t) : t;
  return fmt("%.6g", v);
}

}  // namespace

std::string render_line_plot(const std::vector<PlotSeries>& series,
                             const PlotOptions& opt) {
  for (const auto& s : series)
    if (s.x.size() != s.y.size())
      throw Error(ErrorCode::dimension,
                  "plot series '" + s.label + "' has mismatched x/y lengths");

  const double ml = 72, mr = 18, mt = opt.title.empty() ? 18 : 34, mb = 48;
  const double W = opt.width, H = opt.height;
  const double pw = W - ml - mr, ph = H - mt - mb;

  const Axis xax = fit_axis(series, opt.log_x, true);
  const Axis yax = fit_axis(series, opt.log_y, false);

  auto px = [&](double v) { return ml + xax.unit(v) * pw; };
  auto py = [&](double v) { return mt + (1.0 - yax.unit(v)) * ph; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
      << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width
      << " " << opt.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Grid and ticks.
  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (double t : ticks_for(xax)) {
    const double x = ml + (t - xax.lo) / (xax.hi - xax.lo) * pw;
    svg << "<line x1=\"" << fmt("%.2f", x) << "\" y1=\"" << fmt("%.2f", mt)
        << "\" x2=\"" << fmt("%.2f", x) << "\" y2=\"" << fmt("%.2f", mt + ph)
        << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", mt + ph + 16)
        << "\" text-anchor=\"middle\">" << escape_xml(tick_label(xax, t))
        << "</text>\n";
  }
  for (double t : ticks_for(yax)) {
    const double y = mt + (1.0 - (t - yax.lo) / (yax.hi - yax.lo)) * ph;
    svg << "<line x1=\"" << fmt("%.2f", ml) << "\" y1=\"" << fmt("%.2f", y)
        << "\" x2=\"" << fmt("%.2f", ml + pw) << "\" y2=\"" << fmt("%.2f", y)
        << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << fmt("%.2f", ml - 6) << "\" y=\"" << fmt("%.2f", y + 4)
        << "\" text-anchor=\"end\">" << escape_xml(tick_label(yax, t))
        << "</text>\n";
  }
  svg << "</g>\n";

  // Polylines, split wherever a point is not plottable.
  int color = 0;
  for (const auto& s : series) {
    const char* stroke = kPalette[color % kPaletteSize];
    ++color;
    std::ostringstream seg;
    int seg_points = 0;
    auto flush = [&]() {
      if (seg_points >= 2)
        svg << "<polyline fill=\"none\" stroke=\"" << stroke
            << "\" stroke-width=\"1.5\" points=\"" << seg.str() << "\"/>\n";
      seg.str("");
      seg.clear();
      seg_points = 0;
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!xax.plottable(s.x[i]) || !yax.plottable(s.y[i])) {
        flush();
        continue;
      }
      if (seg_points) seg << " ";
      seg << fmt("%.2f", px(s.x[i])) << "," << fmt("%.2f", py(s.y[i]));
      ++seg_points;
    }
    flush();
  }

  // Frame.
  svg << "<rect x=\"" << fmt("%.2f", ml) << "\" y=\"" << fmt("%.2f", mt)
      << "\" width=\"" << fmt("%.2f", pw) << "\" height=\"" << fmt("%.2f", ph)
      << "\" fill=\"none\" stroke=\"#333\"/>\n";

  // Titles and axis labels.
  svg << "<g font-family=\"sans-serif\" fill=\"#111\">\n";
  if (!opt.title.empty())
    svg << "<text x=\"" << fmt("%.2f", ml + pw / 2) << "\" y=\"20\" font-size=\"14\""
        << " text-anchor=\"middle\">" << escape_xml(opt.title) << "</text>\n";
  if (!opt.x_label.empty())
    svg << "<text x=\"" << fmt("%.2f", ml + pw / 2) << "\" y=\""
        << fmt("%.2f", H - 10) << "\" font-size=\"12\" text-anchor=\"middle\">"
        << escape_xml(opt.x_label) << "</text>\n";
  if (!opt.y_label.empty())
    svg << "<text x=\"16\" y=\"" << fmt("%.2f", mt + ph / 2)
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << fmt("%.2f", mt + ph / 2) << ")\">" << escape_xml(opt.y_label)
        << "</text>\n";
  svg << "</g>\n";

  // Legend, only when labels carry information.
  bool labelled = false;
  for (const auto& s : series)
    if (!s.label.empty()) labelled = true;
  if (labelled) {
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#111\">\n";
    double y = mt + 14;
    color = 0;
    for (const auto& s : series) {
      const char* stroke = kPalette[color % kPaletteSize];
      ++color;
      if (s.label.empty()) continue;
      const double x0 = ml + pw - 150;
      svg << "<line x1=\"" << fmt("%.2f", x0) << "\" y1=\"" << fmt("%.2f", y - 4)
          << "\" x2=\"" << fmt("%.2f", x0 + 22) << "\" y2=\""
          << fmt("%.2f", y - 4) << "\" stroke=\"" << stroke
          << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << fmt("%.2f", x0 + 28) << "\" y=\"" << fmt("%.2f", y)
          << "\">" << escape_xml(s.label) << "</text>\n";
      y += 16;
    }
    svg << "</g>\n";
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace carleman
