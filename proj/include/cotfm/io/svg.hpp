#pragma once

#include "cotfm/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace cotfm::io {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
};

struct PlotFrame {
  std::string title, x_label, y_label;
  int width = 480, height = 400;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Range {
  double lo = kInf, hi = -kInf;
  void add(const std::vector<double>& v) {
    for (double x : v)
      if (std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
  }
  void pad() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double m = 0.05 * (hi - lo);
    lo -= m, hi += m;
  }
};

// Writes the frame, axes and legend; returns the data-to-pixel mappers.
struct Canvas {
  const PlotFrame& f;
  Range rx, ry;
  double left = 60, right = 20, top = 36, bottom = 48;

  double px(double x) const { return left + (x - rx.lo) / (rx.hi - rx.lo) * (f.width - left - right); }
  double py(double y) const { return f.height - bottom - (y - ry.lo) / (ry.hi - ry.lo) * (f.height - top - bottom); }

  void open(std::ostream& out, const std::vector<Series>& series) const {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
        << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << f.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << escape(f.title)
        << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << f.width - left - right << "\" height=\""
        << f.height - top - bottom << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = rx.lo + (rx.hi - rx.lo) * k / 4.0, yv = ry.lo + (ry.hi - ry.lo) * k / 4.0;
      out << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << f.height - bottom + 14 << "\" text-anchor=\"middle\">"
          << fmt(xv) << "</text>\n";
      out << "<text x=\"" << left - 4 << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">" << fmt(yv)
          << "</text>\n";
    }
    out << "<text x=\"" << (left + f.width - right) / 2 << "\" y=\"" << f.height - 10
        << "\" text-anchor=\"middle\">" << escape(f.x_label) << "</text>\n";
    out << "<text transform=\"translate(14," << (top + f.height - bottom) / 2
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(f.y_label) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double ly = top + 14 + 14.0 * static_cast<double>(s);
      out << "<rect x=\"" << f.width - right - 110 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
          << series[s].color << "\"/>\n";
      out << "<text x=\"" << f.width - right - 95 << "\" y=\"" << ly + 1 << "\">" << escape(series[s].label)
          << "</text>\n";
    }
  }
};

}  // namespace detail

/// Scatter plot of one or more point series.
inline void write_scatter_svg(std::ostream& out, const std::vector<Series>& series, const PlotFrame& frame) {
  require(!series.empty(), "scatter: need at least one series");
  detail::Canvas c{frame, {}, {}};
  for (const auto& s : series) {
    require(s.x.size() == s.y.size(), "scatter: series '" + s.label + "' has mismatched x and y");
    c.rx.add(s.x);
    c.ry.add(s.y);
  }
  c.rx.pad();
  c.ry.pad();
  c.open(out, series);
  for (const auto& s : series) {
    out << "<g fill=\"" << s.color << "\" fill-opacity=\"0.35\">\n";
    for (std::size_t k = 0; k < s.x.size(); ++k)
      if (std::isfinite(s.x[k]) && std::isfinite(s.y[k]))
        out << "<circle cx=\"" << detail::fmt(c.px(s.x[k])) << "\" cy=\"" << detail::fmt(c.py(s.y[k]))
            << "\" r=\"1.5\"/>\n";
    out << "</g>\n";
  }
  out << "</svg>\n";
}

/// Gaussian kernel density estimate on `grid`, Silverman's bandwidth.
inline std::vector<double> kde1d(const std::vector<double>& data, const std::vector<double>& grid) {
  require(data.size() >= 2, "kde1d: need at least two values");
  const double n = static_cast<double>(data.size());
  double mean = 0.0;
  for (double v : data) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : data) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  const double h = sd > 0.0 ? 1.06 * sd * std::pow(n, -0.2) : 1e-3;
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) {
    double s = 0.0;
    for (double v : data) s += std::exp(-0.5 * (g - v) * (g - v) / (h * h));
    out.push_back(s / (n * h * std::sqrt(2.0 * std::numbers::pi)));
  }
  return out;
}

/// One KDE curve per series (only `x` of each series is used).
inline void write_kde_svg(std::ostream& out, const std::vector<Series>& series, const PlotFrame& frame,
                          int grid_points = 200) {
  require(!series.empty(), "kde1d: need at least one series");
  require(grid_points >= 2, "kde1d: need at least two grid points");
  detail::Range rx;
  for (const auto& s : series) rx.add(s.x);
  rx.pad();
  std::vector<double> grid;
  for (int k = 0; k < grid_points; ++k) grid.push_back(rx.lo + (rx.hi - rx.lo) * k / (grid_points - 1.0));
  std::vector<std::vector<double>> dens;
  detail::Range ry;
  ry.add({0.0});
  for (const auto& s : series) {
    dens.push_back(kde1d(s.x, grid));
    ry.add(dens.back());
  }
  ry.hi *= 1.05;
  detail::Canvas c{frame, rx, ry};
  c.open(out, series);
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << series[s].color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < grid.size(); ++k)
      out << (k ? " " : "") << detail::fmt(c.px(grid[k])) << ',' << detail::fmt(c.py(dens[s][k]));
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace cotfm::io
