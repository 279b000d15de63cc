#pragma once

#include <optional>
#include <string>
#include <vector>

namespace covcal {

struct SvgSeries {
    std::string label;
    std::string color;  // e.g. "#1f77b4"
    std::vector<std::pair<double, double>> points;
};

struct SvgChartOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::optional<double> dashed_y;  // horizontal reference line
    int width = 640;
    int height = 420;
};

/// Self-contained SVG line chart with axes, tick labels, and a legend.
void write_line_chart_svg(const std::string& path, const std::vector<SvgSeries>& series,
                          const SvgChartOptions& options);

}  // namespace covcal
