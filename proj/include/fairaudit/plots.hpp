#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairaudit/dataset.hpp"

namespace fairaudit {

struct TrendSeries {
  std::string label;
  std::vector<std::pair<int, double>> points;  // (year, value), ascending year
};

/// Per-ward lines on the left axis and the cross-ward yearly mean on the right axis.
struct TrendPlot {
  std::string column;
  std::vector<TrendSeries> wards;
  TrendSeries mean;
  std::string svg;
};

struct TrendPoint {
  std::string ward;
  int year = 0;
  double value = 0.0;
};

TrendPlot trend_plot(std::span<const TrendPoint> points, const std::string& column);
TrendPlot trend_plot(const JoinedTable& table, const std::string& column);

/// OLS fit y = intercept + slope * x with a two-sided t-test on the slope and
/// a 95% confidence band for the mean response.
struct ScatterRegression {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  double residual_stddev = 0.0;
  std::size_t n = 0;
  std::vector<double> band_x;
  std::vector<double> band_low;
  std::vector<double> band_high;
  std::string svg;
};

ScatterRegression scatter_regression_plot(std::span<const double> x, std::span<const double> y,
                                          const std::string& x_label = "x", const std::string& y_label = "y");

}  // namespace fairaudit
