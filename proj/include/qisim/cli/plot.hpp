#pragma once

// Self-contained SVG charts: heatmaps, line charts and bar charts.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qisim::cli::plot {

// 256-level colormap. Level k = round(255 * clamp(v, 0, 1)); the colour is
// linear RGB interpolation between the anchors
//   0.00 #000004, 0.25 #51127c, 0.50 #b73779, 0.75 #fc8961, 1.00 #fcfdbf.
std::array<std::uint8_t, 3> colormap(double value);

struct Axes {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool markers = false;
    bool line = true;
};

std::string line_chart(const std::vector<Series>& series, const Axes& axes);

// z(i, j) drawn with x from x[i] and y from y[j]; block-averaged down to at
// most max_cells per axis.
std::string heatmap(const Eigen::MatrixXd& z, double x_min, double x_max, double y_min, double y_max,
                    const Axes& axes, int max_cells = 128);

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const Axes& axes, double y_min = 0.0, double y_max = 1.0);

} // namespace qisim::cli::plot
