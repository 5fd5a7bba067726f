#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace kaczmarz::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return ec == std::errc{} ? std::string(buf, end) : std::string("0");
}

inline std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace detail

/// Log-linear line plot: linear x axis, log10 y axis, one polyline per
/// series. Nonpositive y values are drawn at the bottom of the axis.
inline std::string log_linear_plot(const std::vector<Series>& series, const std::string& title,
                                   const std::string& x_label, const std::string& y_label) {
  constexpr double width = 640, height = 420;
  constexpr double left = 70, right = 20, top = 40, bottom = 55;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      if (s.y[i] > 0 && std::isfinite(s.y[i])) {
        y_min = std::min(y_min, s.y[i]);
        y_max = std::max(y_max, s.y[i]);
      }
    }
  }
  if (!std::isfinite(x_min)) x_min = 0, x_max = 1;
  if (x_max == x_min) x_max = x_min + 1;
  if (!std::isfinite(y_min)) y_min = 1e-16, y_max = 1;
  double lo = std::floor(std::log10(y_min));
  double hi = std::ceil(std::log10(y_max));
  if (hi <= lo) hi = lo + 1;

  auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) {
    const double ly = (y > 0 && std::isfinite(y)) ? std::log10(y) : lo;
    return top + (hi - std::clamp(ly, lo, hi)) / (hi - lo) * plot_h;
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  out += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  out += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         detail::escape(title) + "</text>\n";

  // decades on y, five even ticks on x
  const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 10)));
  for (int d = static_cast<int>(lo); d <= static_cast<int>(hi); d += step) {
    const double y = top + (hi - d) / (hi - lo) * plot_h;
    out += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(y) + "\" x2=\"" +
           detail::fixed(left + plot_w) + "\" y2=\"" + detail::fixed(y) + "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + detail::fixed(left - 6) + "\" y=\"" + detail::fixed(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" + std::to_string(d) + "</text>\n";
  }
  for (int t = 0; t <= 5; ++t) {
    const double xv = x_min + (x_max - x_min) * t / 5.0;
    const double x = px(xv);
    out += "<line x1=\"" + detail::fixed(x) + "\" y1=\"" + detail::fixed(top) + "\" x2=\"" + detail::fixed(x) +
           "\" y2=\"" + detail::fixed(top + plot_h) + "\" stroke=\"#eeeeee\"/>\n";
    out += "<text x=\"" + detail::fixed(x) + "\" y=\"" + detail::fixed(top + plot_h + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + detail::fixed(xv, 0) +
           "</text>\n";
  }
  out += "<rect x=\"" + detail::fixed(left) + "\" y=\"" + detail::fixed(top) + "\" width=\"" + detail::fixed(plot_w) +
         "\" height=\"" + detail::fixed(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text x=\"" + detail::fixed(left + plot_w / 2) + "\" y=\"" + detail::fixed(height - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + detail::escape(x_label) +
         "</text>\n";
  out += "<text transform=\"translate(16 " + detail::fixed(top + plot_h / 2) +
         ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         detail::escape(y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = detail::palette[k % std::size(detail::palette)];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (i) out += ' ';
      out += detail::fixed(px(s.x[i])) + "," + detail::fixed(py(s.y[i]));
    }
    out += "\"/>\n";
    const double ly = top + 16 + 16 * static_cast<double>(k);
    out += "<line x1=\"" + detail::fixed(left + plot_w - 110) + "\" y1=\"" + detail::fixed(ly) + "\" x2=\"" +
           detail::fixed(left + plot_w - 86) + "\" y2=\"" + detail::fixed(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + detail::fixed(left + plot_w - 80) + "\" y=\"" + detail::fixed(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace kaczmarz::svg
