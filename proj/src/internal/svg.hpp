#pragma once

#include <string>
#include <vector>

namespace gelab::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  bool markers = false;
};

// Line chart. Points that cannot be drawn on a log axis are skipped.
std::string line_plot(const Axes& axes, const std::vector<Series>& series);

std::string bar_chart(const Axes& axes, const std::vector<std::string>& labels, const std::vector<double>& values);

}  // namespace gelab::svg
