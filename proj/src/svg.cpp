#include "internal/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace gelab::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi == lo) {
      const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= pad;
      hi += pad;
    }
  }
};

bool drawable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }
double axis_value(double v, bool log) { return log ? std::log10(v) : v; }

std::string header(const Axes& a) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
                  "viewBox=\"0 0 640 420\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(a.title) + "</text>\n";
  s += "<text x=\"" + fmt("%.2f", kLeft + (kWidth - kLeft - kRight) / 2) +
       "\" y=\"410\" text-anchor=\"middle\">" + escape(a.x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + fmt("%.2f", kTop + (kHeight - kTop - kBottom) / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + fmt("%.2f", kTop + (kHeight - kTop - kBottom) / 2) +
       ")\">" + escape(a.y_label) + "</text>\n";
  s += "<rect x=\"" + fmt("%.2f", kLeft) + "\" y=\"" + fmt("%.2f", kTop) + "\" width=\"" +
       fmt("%.2f", kWidth - kLeft - kRight) + "\" height=\"" + fmt("%.2f", kHeight - kTop - kBottom) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  return s;
}

std::string tick_label(double axis_v, bool log) {
  return log ? fmt("%.3g", std::pow(10.0, axis_v)) : fmt("%.3g", axis_v);
}

}  // namespace

std::string line_plot(const Axes& axes, const std::vector<Series>& series) {
  Range rx, ry;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (drawable(s.x[i], axes.log_x) && drawable(s.y[i], axes.log_y)) {
        rx.add(axis_value(s.x[i], axes.log_x));
        ry.add(axis_value(s.y[i], axes.log_y));
      }
  rx.settle();
  ry.settle();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double v) { return kTop + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

  std::string out = header(axes);
  for (int k = 0; k <= 4; ++k) {
    const double xv = rx.lo + (rx.hi - rx.lo) * k / 4.0;
    const double yv = ry.lo + (ry.hi - ry.lo) * k / 4.0;
    out += "<text x=\"" + fmt("%.2f", px(xv)) + "\" y=\"" + fmt("%.2f", kHeight - kBottom + 16) +
           "\" text-anchor=\"middle\">" + tick_label(xv, axes.log_x) + "</text>\n";
    out += "<text x=\"" + fmt("%.2f", kLeft - 6) + "\" y=\"" + fmt("%.2f", py(yv) + 4) +
           "\" text-anchor=\"end\">" + tick_label(yv, axes.log_y) + "</text>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
    std::string points;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!drawable(s.x[i], axes.log_x) || !drawable(s.y[i], axes.log_y)) continue;
      const double X = px(axis_value(s.x[i], axes.log_x)), Y = py(axis_value(s.y[i], axes.log_y));
      points += fmt("%.2f", X) + "," + fmt("%.2f", Y) + " ";
      if (axes.markers)
        out += "<circle cx=\"" + fmt("%.2f", X) + "\" cy=\"" + fmt("%.2f", Y) + "\" r=\"3\" fill=\"" + color +
               "\"/>\n";
    }
    out += std::string("<polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"1.5\" points=\"" + points +
           "\"/>\n";
    out += "<text x=\"" + fmt("%.2f", kLeft + 10) + "\" y=\"" + fmt("%.2f", kTop + 16 + 14.0 * si) + "\" fill=\"" +
           color + "\">" + escape(s.label) + "</text>\n";
  }
  return out + "</svg>\n";
}

std::string bar_chart(const Axes& axes, const std::vector<std::string>& labels, const std::vector<double>& values) {
  Range ry;
  for (double v : values)
    if (drawable(v, axes.log_y)) ry.add(axis_value(v, axes.log_y));
  if (!axes.log_y) ry.add(0.0);
  ry.settle();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto py = [&](double v) { return kTop + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };
  std::string out = header(axes);
  for (int k = 0; k <= 4; ++k) {
    const double yv = ry.lo + (ry.hi - ry.lo) * k / 4.0;
    out += "<text x=\"" + fmt("%.2f", kLeft - 6) + "\" y=\"" + fmt("%.2f", py(yv) + 4) +
           "\" text-anchor=\"end\">" + tick_label(yv, axes.log_y) + "</text>\n";
  }
  const double slot = values.empty() ? pw : pw / static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = kLeft + slot * (static_cast<double>(i) + 0.15);
    if (drawable(values[i], axes.log_y)) {
      const double top = py(axis_value(values[i], axes.log_y));
      out += "<rect x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", top) + "\" width=\"" + fmt("%.2f", slot * 0.7) +
             "\" height=\"" + fmt("%.2f", kTop + ph - top) + "\" fill=\"" + kPalette[0] + "\"/>\n";
    }
    const std::string label = i < labels.size() ? labels[i] : std::string();
    out += "<text x=\"" + fmt("%.2f", x + slot * 0.35) + "\" y=\"" + fmt("%.2f", kHeight - kBottom + 16) +
           "\" text-anchor=\"middle\">" + escape(label) + "</text>\n";
  }
  return out + "</svg>\n";
}

}  // namespace gelab::svg
