#pragma once

// Bare-bones SVG line plots: lines, optional shaded band, axes, legend.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "semtopo/error.hpp"

namespace semtopo {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band_low;  // optional, same length as x
  std::vector<double> band_high;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  int width = 640;
  int height = 400;
};

namespace detail {

inline std::string fixed(double v, int precision = 2) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, r.ptr);
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step (1, 2 or 5 times a power of ten) giving about `target` ticks.
inline double tick_step(double span, int target = 5) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return mag * (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0);
}

}  // namespace detail

inline std::string render_svg(const LinePlot& plot) {
  static const char* palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw InvalidArgument("plot series '" + s.label + "' has mismatched x/y");
    const bool band = !s.band_low.empty();
    if (band && (s.band_low.size() != s.x.size() || s.band_high.size() != s.x.size()))
      throw InvalidArgument("plot series '" + s.label + "' has a band of the wrong length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min({y0, s.y[i], band ? s.band_low[i] : s.y[i]});
      y1 = std::max({y1, s.y[i], band ? s.band_high[i] : s.y[i]});
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = plot.width - left - right, ph = plot.height - top - bottom;
  const auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  const auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  using detail::fixed;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(plot.width) +
                    "\" height=\"" + std::to_string(plot.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::xml_escape(plot.title) + "</text>\n";

  // Axes and ticks.
  svg += "<g stroke=\"black\" fill=\"none\"><rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" +
         fixed(pw) + "\" height=\"" + fixed(ph) + "\"/></g>\n";
  for (int axis = 0; axis < 2; ++axis) {
    const double lo = axis == 0 ? x0 : y0, hi = axis == 0 ? x1 : y1;
    const double step = detail::tick_step(hi - lo);
    const int precision = std::max(0, static_cast<int>(-std::floor(std::log10(step))));
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12; t += step) {
      if (axis == 0)
        svg += "<line x1=\"" + fixed(sx(t)) + "\" y1=\"" + fixed(top + ph) + "\" x2=\"" + fixed(sx(t)) + "\" y2=\"" +
               fixed(top + ph + 5) + "\" stroke=\"black\"/><text x=\"" + fixed(sx(t)) + "\" y=\"" +
               fixed(top + ph + 18) + "\" text-anchor=\"middle\">" + fixed(t, precision) + "</text>\n";
      else
        svg += "<line x1=\"" + fixed(left - 5) + "\" y1=\"" + fixed(sy(t)) + "\" x2=\"" + fixed(left) + "\" y2=\"" +
               fixed(sy(t)) + "\" stroke=\"black\"/><text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(sy(t) + 4) +
               "\" text-anchor=\"end\">" + fixed(t, precision) + "</text>\n";
    }
  }
  svg += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(plot.height - 10.0) + "\" text-anchor=\"middle\">" +
         detail::xml_escape(plot.x_label) + "</text>\n";
  svg += "<text transform=\"translate(16," + fixed(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::xml_escape(plot.y_label) + "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const std::string color = palette[k % std::size(palette)];
    if (!s.band_low.empty() && !s.x.empty()) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) pts += fixed(sx(s.x[i])) + "," + fixed(sy(s.band_high[i])) + " ";
      for (std::size_t i = s.x.size(); i-- > 0;) pts += fixed(sx(s.x[i])) + "," + fixed(sy(s.band_low[i])) + " ";
      svg += "<polygon points=\"" + pts + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) pts += fixed(sx(s.x[i])) + "," + fixed(sy(s.y[i])) + " ";
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    svg += "<line x1=\"" + fixed(left + pw + 10) + "\" y1=\"" + fixed(ly) + "\" x2=\"" + fixed(left + pw + 30) +
           "\" y2=\"" + fixed(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/><text x=\"" +
           fixed(left + pw + 35) + "\" y=\"" + fixed(ly + 4) + "\">" + detail::xml_escape(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace semtopo
