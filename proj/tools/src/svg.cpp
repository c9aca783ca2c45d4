#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pq::cli {

namespace {

constexpr int kWidth = 880;
constexpr int kHeight = 320;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 40;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string svg_line_chart(std::span<const double> values, double sample_rate_hz,
                           const std::string& title) {
  if (values.empty()) {
    throw std::invalid_argument("svg_line_chart: no samples");
  }
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const double t_end = static_cast<double>(values.size() - 1) / sample_rate_hz;

  auto x_of = [&](std::size_t i) {
    return kMarginLeft + plot_w * static_cast<double>(i) / static_cast<double>(values.size() - 1);
  };
  auto y_of = [&](double v) { return kMarginTop + plot_h * (hi - v) / (hi - lo); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(kHeight) + "\" viewBox=\"0 0 " +
         std::to_string(kWidth) + " " + std::to_string(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(kWidth / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         title + "</text>\n";
  svg += "<rect x=\"" + std::to_string(kMarginLeft) + "\" y=\"" + std::to_string(kMarginTop) +
         "\" width=\"" + fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
         "\" fill=\"none\" stroke=\"#333\"/>\n";
  if (lo < 0.0 && hi > 0.0) {
    const double y0 = y_of(0.0);
    svg += "<line x1=\"" + std::to_string(kMarginLeft) + "\" y1=\"" + fmt(y0) + "\" x2=\"" +
           fmt(kMarginLeft + plot_w) + "\" y2=\"" + fmt(y0) +
           "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
  }
  // y-axis extremes and x-axis end labels
  svg += "<text x=\"" + std::to_string(kMarginLeft - 6) + "\" y=\"" + fmt(y_of(hi) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(hi) +
         "</text>\n";
  svg += "<text x=\"" + std::to_string(kMarginLeft - 6) + "\" y=\"" + fmt(y_of(lo) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(lo) +
         "</text>\n";
  svg += "<text x=\"" + std::to_string(kMarginLeft) + "\" y=\"" +
         std::to_string(kHeight - 12) +
         "\" font-family=\"sans-serif\" font-size=\"11\">0 s</text>\n";
  svg += "<text x=\"" + fmt(kMarginLeft + plot_w) + "\" y=\"" + std::to_string(kHeight - 12) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(t_end) +
         " s</text>\n";

  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) svg += " ";
    svg += fmt(x_of(i)) + "," + fmt(y_of(values[i]));
  }
  svg += "\"/>\n</svg>\n";
  return svg;
}

void write_svg_line_chart(std::span<const double> values, double sample_rate_hz,
                          const std::string& title, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << svg_line_chart(values, sample_rate_hz, title);
}

}  // namespace pq::cli
