#pragma once

#include <filesystem>
#include <span>
#include <string>

namespace pq::cli {

/// Minimal static line chart: bordered plot area, zero axis, one polyline.
std::string svg_line_chart(std::span<const double> values, double sample_rate_hz,
                           const std::string& title);

void write_svg_line_chart(std::span<const double> values, double sample_rate_hz,
                          const std::string& title, const std::filesystem::path& path);

}  // namespace pq::cli
