#include "fairaudit/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "fairaudit/error.hpp"

namespace fairaudit {

namespace {

constexpr double kWidth = 720, kHeight = 420, kLeft = 70, kRight = 70, kTop = 40, kBottom = 50;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape_xml(std::string_view s) {
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

struct Axis {
  double lo = 0, hi = 1;
  double px_lo = 0, px_hi = 1;

  Axis(double lo_, double hi_, double a, double b) : lo(lo_), hi(hi_), px_lo(a), px_hi(b) {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  double operator()(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
};

std::pair<double, double> range_of(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 1.0};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double pad = 0.05 * (*hi - *lo);
  return {*lo - pad, *hi + pad};
}

// Canvas, frame and axis labels.
void open_svg(std::ostringstream& s, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" viewBox=\"0 0 "
    << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title) << "</text>\n";
  s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
    << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
}

void y_ticks(std::ostringstream& s, const Axis& y, bool right, const std::string& colour) {
  for (int k = 0; k <= 4; ++k) {
    const double v = y.lo + (y.hi - y.lo) * k / 4.0;
    const double py = y(v);
    const double x = right ? kWidth - kRight + 6 : kLeft - 6;
    s << "<text x=\"" << num(x) << "\" y=\"" << num(py + 4) << "\" text-anchor=\"" << (right ? "start" : "end")
      << "\" fill=\"" << colour << "\">" << tick(v) << "</text>\n";
  }
}

void polyline(std::ostringstream& s, const std::vector<std::pair<double, double>>& pts, const std::string& style) {
  s << "<polyline fill=\"none\" " << style << " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) s << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
  s << "\"/>\n";
}

}  // namespace

TrendPlot trend_plot(std::span<const TrendPoint> points, const std::string& column) {
  if (points.empty()) fail(ErrorCode::empty_input, "no points to plot");
  std::map<std::string, std::map<int, double>> by_ward;
  std::map<int, std::pair<double, std::size_t>> by_year;
  for (const auto& p : points) {
    by_ward[p.ward][p.year] = p.value;
    auto& acc = by_year[p.year];
    acc.first += p.value;
    ++acc.second;
  }

  TrendPlot plot;
  plot.column = column;
  std::vector<double> ward_values, mean_values;
  for (const auto& [ward, series] : by_ward) {
    TrendSeries ts{ward, {}};
    for (const auto& [year, v] : series) {
      ts.points.emplace_back(year, v);
      ward_values.push_back(v);
    }
    plot.wards.push_back(std::move(ts));
  }
  plot.mean.label = "mean";
  for (const auto& [year, acc] : by_year) {
    const double m = acc.first / static_cast<double>(acc.second);
    plot.mean.points.emplace_back(year, m);
    mean_values.push_back(m);
  }

  const int y0 = by_year.begin()->first, y1 = by_year.rbegin()->first;
  const Axis x(y0, y1, kLeft, kWidth - kRight);
  const auto [wl, wh] = range_of(ward_values);
  const auto [ml, mh] = range_of(mean_values);
  const Axis left(wl, wh, kHeight - kBottom, kTop);
  const Axis right(ml, mh, kHeight - kBottom, kTop);

  std::ostringstream s;
  open_svg(s, column + " by ward and year");
  for (int year = y0; year <= y1; ++year)
    s << "<text x=\"" << num(x(year)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << year
      << "</text>\n";
  y_ticks(s, left, false, "#555555");
  y_ticks(s, right, true, "#c0392b");
  s << "<text x=\"16\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 16 " << kHeight / 2
    << ")\" text-anchor=\"middle\">" << escape_xml(column) << " (wards)</text>\n";
  s << "<text x=\"" << kWidth - 14 << "\" y=\"" << kHeight / 2 << "\" transform=\"rotate(90 " << kWidth - 14 << ' '
    << kHeight / 2 << ")\" text-anchor=\"middle\" fill=\"#c0392b\">mean</text>\n";
  for (const auto& ts : plot.wards) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [year, v] : ts.points) pts.emplace_back(x(year), left(v));
    polyline(s, pts, "stroke=\"#7f8c8d\" stroke-opacity=\"0.5\" stroke-width=\"1\"");
  }
  std::vector<std::pair<double, double>> pts;
  for (const auto& [year, v] : plot.mean.points) pts.emplace_back(x(year), right(v));
  polyline(s, pts, "stroke=\"#c0392b\" stroke-width=\"3\"");
  s << "</svg>\n";
  plot.svg = s.str();
  return plot;
}

TrendPlot trend_plot(const JoinedTable& table, const std::string& column) {
  const auto values = table.numeric_column(column);
  std::vector<TrendPoint> points;
  points.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) points.push_back({table.rows[i].ward, table.rows[i].year, values[i]});
  return trend_plot(points, column);
}

ScatterRegression scatter_regression_plot(std::span<const double> x, std::span<const double> y, const std::string& x_label,
                                          const std::string& y_label) {
  if (x.size() != y.size()) fail(ErrorCode::length_mismatch, "x and y differ in length");
  if (x.size() < 3) fail(ErrorCode::too_few_samples, "regression needs at least three points");
  const std::size_t n = x.size();
  const double dn = static_cast<double>(n);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= dn;
  my /= dn;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) fail(ErrorCode::degenerate_range, "x is constant");

  ScatterRegression r;
  r.n = n;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    sse += e * e;
  }
  const double df = dn - 2.0;
  r.residual_stddev = std::sqrt(sse / df);
  r.slope_stderr = r.residual_stddev / std::sqrt(sxx);
  const boost::math::students_t dist(df);
  if (r.slope_stderr > 0) {
    r.t_statistic = r.slope / r.slope_stderr;
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t_statistic)));
  } else {
    r.t_statistic = r.slope == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.slope);
    r.p_value = r.slope == 0 ? 1.0 : 0.0;
  }

  const double tcrit = boost::math::quantile(boost::math::complement(dist, 0.025));
  const auto [xl, xh] = std::minmax_element(x.begin(), x.end());
  constexpr int kBand = 50;
  for (int k = 0; k <= kBand; ++k) {
    const double xv = *xl + (*xh - *xl) * k / kBand;
    const double fit = r.intercept + r.slope * xv;
    const double half = tcrit * r.residual_stddev * std::sqrt(1.0 / dn + (xv - mx) * (xv - mx) / sxx);
    r.band_x.push_back(xv);
    r.band_low.push_back(fit - half);
    r.band_high.push_back(fit + half);
  }

  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  ys.insert(ys.end(), r.band_low.begin(), r.band_low.end());
  ys.insert(ys.end(), r.band_high.begin(), r.band_high.end());
  const auto [ax0, ax1] = range_of(xs);
  const auto [ay0, ay1] = range_of(ys);
  const Axis X(ax0, ax1, kLeft, kWidth - kRight), Y(ay0, ay1, kHeight - kBottom, kTop);

  char title[160];
  std::snprintf(title, sizeof title, "slope %.4g (p = %.3g), n = %zu", r.slope, r.p_value, n);
  std::ostringstream s;
  open_svg(s, title);
  for (int k = 0; k <= 4; ++k) {
    const double v = X.lo + (X.hi - X.lo) * k / 4.0;
    s << "<text x=\"" << num(X(v)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << tick(v)
      << "</text>\n";
  }
  y_ticks(s, Y, false, "#555555");
  s << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">" << escape_xml(x_label)
    << "</text>\n";
  s << "<text x=\"16\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 16 " << kHeight / 2
    << ")\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";
  s << "<polygon fill=\"#2980b9\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
  for (std::size_t k = 0; k < r.band_x.size(); ++k) s << num(X(r.band_x[k])) << ',' << num(Y(r.band_high[k])) << ' ';
  for (std::size_t k = r.band_x.size(); k-- > 0;)
    s << num(X(r.band_x[k])) << ',' << num(Y(r.band_low[k])) << (k ? " " : "");
  s << "\"/>\n";
  for (std::size_t i = 0; i < n; ++i)
    s << "<circle cx=\"" << num(X(x[i])) << "\" cy=\"" << num(Y(y[i])) << "\" r=\"2.5\" fill=\"#34495e\"/>\n";
  polyline(s, {{X(*xl), Y(r.intercept + r.slope * *xl)}, {X(*xh), Y(r.intercept + r.slope * *xh)}},
           "stroke=\"#2980b9\" stroke-width=\"2\"");
  s << "</svg>\n";
  r.svg = s.str();
  return r;
}

}  // namespace fairaudit
