#pragma once

// Minimal deterministic SVG line charts. Identical inputs give identical
// bytes: coordinates are printed with fixed precision and nothing depends on
// locale or time.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace altmin {

struct Series {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  return colors[k % (sizeof colors / sizeof colors[0])];
}

}  // namespace detail

inline std::string render_svg(const LineChart& chart) {
  constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
  constexpr double kLogFloor = 1e-16;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  auto ty = [&](double y) { return chart.log_y ? std::log10(std::max(y, kLogFloor)) : y; };

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : chart.series) {
    for (std::size_t k = 0; k < s.xs.size() && k < s.ys.size(); ++k) {
      if (!std::isfinite(s.xs[k]) || !std::isfinite(s.ys[k])) continue;
      x_lo = std::min(x_lo, s.xs[k]);
      x_hi = std::max(x_hi, s.xs[k]);
      y_lo = std::min(y_lo, ty(s.ys[k]));
      y_hi = std::max(y_hi, ty(s.ys[k]));
    }
  }
  if (!(x_lo <= x_hi)) x_lo = 0, x_hi = 1;
  if (!(y_lo <= y_hi)) y_lo = 0, y_hi = 1;
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) y_hi = y_lo + 1;
  if (chart.log_y) y_lo = std::floor(y_lo), y_hi = std::ceil(y_hi);

  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - (ty(y) - y_lo) / (y_hi - y_lo) * plot_h; };
  auto py_raw = [&](double t) { return kTop + plot_h - (t - y_lo) / (y_hi - y_lo) * plot_h; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << detail::fixed(kLeft + plot_w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << detail::escape_xml(chart.title) << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << detail::fixed(plot_w) << "\" height=\""
    << detail::fixed(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 4; ++k) {
    const double xv = x_lo + (x_hi - x_lo) * k / 4.0;
    o << "<text x=\"" << detail::fixed(px(xv)) << "\" y=\"" << detail::fixed(kTop + plot_h + 16)
      << "\" text-anchor=\"middle\">" << detail::tick_label(xv) << "</text>\n";
  }
  const int y_ticks = chart.log_y ? static_cast<int>(y_hi - y_lo) : 4;
  for (int k = 0; k <= y_ticks; ++k) {
    const double t = y_lo + (y_hi - y_lo) * k / std::max(1, y_ticks);
    const std::string label = chart.log_y ? "1e" + std::to_string(static_cast<int>(std::lround(t))) : detail::tick_label(t);
    o << "<text x=\"" << detail::fixed(kLeft - 6) << "\" y=\"" << detail::fixed(py_raw(t) + 4)
      << "\" text-anchor=\"end\">" << label << "</text>\n";
  }
  o << "<text x=\"" << detail::fixed(kLeft + plot_w / 2) << "\" y=\"" << detail::fixed(kHeight - 12)
    << "\" text-anchor=\"middle\">" << detail::escape_xml(chart.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << detail::fixed(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << detail::fixed(kTop + plot_h / 2) << ")\">" << detail::escape_xml(chart.y_label) << "</text>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    o << "<polyline fill=\"none\" stroke=\"" << detail::palette(s) << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t k = 0; k < series.xs.size() && k < series.ys.size(); ++k) {
      if (!std::isfinite(series.xs[k]) || !std::isfinite(series.ys[k])) continue;
      o << (first ? "" : " ") << detail::fixed(px(series.xs[k])) << ',' << detail::fixed(py(series.ys[k]));
      first = false;
    }
    o << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    o << "<line x1=\"" << detail::fixed(kLeft + plot_w + 12) << "\" y1=\"" << detail::fixed(ly - 4) << "\" x2=\""
      << detail::fixed(kLeft + plot_w + 32) << "\" y2=\"" << detail::fixed(ly - 4) << "\" stroke=\""
      << detail::palette(s) << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << detail::fixed(kLeft + plot_w + 38) << "\" y=\"" << detail::fixed(ly) << "\">"
      << detail::escape_xml(series.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace altmin
