// SPDX-License-Identifier: Apache-2.0
//
// Small self-contained SVG emitters for the evaluate subcommand: heatmap
// panels of the space-time fields and a line plot of the Hamiltonian series.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace svgplot {

struct Heatmap {
  std::string title;
  // row-major [time][space]
  std::vector<double> values;
  int rows = 0, cols = 0;
};

struct Series {
  std::string label;
  std::string color;
  std::vector<double> y;
};

inline std::string color_of(double v, double lo, double hi) {
  // symmetric blue-white-red diverging map
  const double m = std::max(std::abs(lo), std::abs(hi));
  double t = m > 0 ? v / m : 0.0;
  t = std::clamp(t, -1.0, 1.0);
  int r, g, b;
  if (t >= 0) {
    r = 255;
    g = static_cast<int>(255 * (1.0 - t));
    b = static_cast<int>(255 * (1.0 - t));
  } else {
    r = static_cast<int>(255 * (1.0 + t));
    g = static_cast<int>(255 * (1.0 + t));
    b = 255;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

/// 2x2 grid of space-time heatmaps (time on x, space on y).
inline bool write_heatmap_grid(const std::string& path, const std::vector<Heatmap>& panels,
                               double t_max, const std::string& meta) {
  const int pw = 340, ph = 240, margin = 50, gap = 30;
  const int grid_cols = 2;
  const int grid_rows = (static_cast<int>(panels.size()) + 1) / 2;
  const int width = margin + grid_cols * (pw + gap);
  const int height = margin / 2 + grid_rows * (ph + gap) + 20;

  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n";
  out << "<!-- " << meta << " -->\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Heatmap& hm = panels[p];
    const int px = margin + static_cast<int>(p % grid_cols) * (pw + gap);
    const int py = margin / 2 + static_cast<int>(p / grid_cols) * (ph + gap);
    double lo = 0.0, hi = 0.0;
    for (double v : hm.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out << "<text x='" << px + pw / 2 << "' y='" << py - 6
        << "' text-anchor='middle' font-family='sans-serif' font-size='13'>" << hm.title
        << "</text>\n";
    const double cw = static_cast<double>(pw) / hm.rows;
    const double ch = static_cast<double>(ph) / hm.cols;
    for (int j = 0; j < hm.rows; ++j)
      for (int i = 0; i < hm.cols; ++i) {
        const double v = hm.values[static_cast<std::size_t>(j) * hm.cols + i];
        out << "<rect x='" << px + j * cw << "' y='" << py + ph - (i + 1) * ch << "' width='"
            << cw + 0.5 << "' height='" << ch + 0.5 << "' fill='" << color_of(v, lo, hi)
            << "'/>\n";
      }
    out << "<rect x='" << px << "' y='" << py << "' width='" << pw << "' height='" << ph
        << "' fill='none' stroke='black'/>\n";
    out << "<text x='" << px + pw / 2 << "' y='" << py + ph + 16
        << "' text-anchor='middle' font-family='sans-serif' font-size='11'>t in [0, " << t_max
        << "]</text>\n";
  }
  out << "</svg>\n";

  std::ofstream f(path);
  if (!f) return false;
  f << out.str();
  return static_cast<bool>(f);
}

/// Line plot of one or more series over time.
inline bool write_line_plot(const std::string& path, const std::string& title,
                            const std::vector<double>& t, const std::vector<Series>& series,
                            const std::string& meta) {
  const int width = 640, height = 400, ml = 70, mr = 20, mt = 40, mb = 50;
  const int pw = width - ml - mr, ph = height - mt - mb;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const Series& s : series)
    for (double v : s.y) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi - lo < 1e-12) {
    hi += 1.0;
    lo -= 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double t0 = t.front(), t1 = t.back();

  auto X = [&](double tv) { return ml + pw * (tv - t0) / (t1 - t0); };
  auto Y = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n";
  out << "<!-- " << meta << " -->\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-family='sans-serif' "
      << "font-size='14'>" << title << "</text>\n";
  out << "<rect x='" << ml << "' y='" << mt << "' width='" << pw << "' height='" << ph
      << "' fill='none' stroke='black'/>\n";

  // axis ticks
  for (int k = 0; k <= 4; ++k) {
    const double tv = t0 + k * (t1 - t0) / 4;
    const double vv = lo + k * (hi - lo) / 4;
    out << "<text x='" << X(tv) << "' y='" << mt + ph + 18
        << "' text-anchor='middle' font-family='sans-serif' font-size='10'>" << tv << "</text>\n";
    out << "<text x='" << ml - 6 << "' y='" << Y(vv) + 3
        << "' text-anchor='end' font-family='sans-serif' font-size='10'>";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", vv);
    out << buf << "</text>\n";
  }
  out << "<text x='" << ml + pw / 2 << "' y='" << height - 10
      << "' text-anchor='middle' font-family='sans-serif' font-size='12'>t</text>\n";

  for (const Series& s : series) {
    out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < t.size(); ++i) out << X(t[i]) << ',' << Y(s.y[i]) << ' ';
    out << "'/>\n";
  }
  // legend
  int ly = mt + 16;
  for (const Series& s : series) {
    out << "<line x1='" << ml + 10 << "' y1='" << ly - 4 << "' x2='" << ml + 34 << "' y2='"
        << ly - 4 << "' stroke='" << s.color << "' stroke-width='2'/>\n";
    out << "<text x='" << ml + 40 << "' y='" << ly
        << "' font-family='sans-serif' font-size='11'>" << s.label << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";

  std::ofstream f(path);
  if (!f) return false;
  f << out.str();
  return static_cast<bool>(f);
}

}  // namespace svgplot
