#include "qisim/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "qisim/errors.hpp"

namespace qisim::cli::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 30.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string header()
{
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n"
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

struct Frame {
    double x0, x1, y0, y1;
    bool log_x;

    double px(double x) const
    {
        const double a = log_x ? std::log10(x0) : x0;
        const double b = log_x ? std::log10(x1) : x1;
        const double v = log_x ? std::log10(x) : x;
        return kLeft + (v - a) / (b - a) * (kWidth - kLeft - kRight);
    }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string decorations(const Frame& f, const Axes& axes)
{
    std::string s;
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(axes.title) + "</text>\n";
    s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kWidth - kLeft - kRight) +
         "\" height=\"" + num(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        double xv;
        if (f.log_x)
            xv = std::pow(10.0, std::log10(f.x0) + k * (std::log10(f.x1) - std::log10(f.x0)) / 4.0);
        else
            xv = f.x0 + k * (f.x1 - f.x0) / 4.0;
        const double yv = f.y0 + k * (f.y1 - f.y0) / 4.0;
        const double X = f.px(xv);
        const double Y = f.py(yv);
        const double base = kHeight - kBottom;
        s += "<line x1=\"" + num(X) + "\" y1=\"" + num(base) + "\" x2=\"" + num(X) + "\" y2=\"" + num(base + 5) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(X) + "\" y=\"" + num(base + 18) + "\" text-anchor=\"middle\">" + tick_label(xv) +
             "</text>\n";
        s += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(Y) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(Y) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(Y + 4) + "\" text-anchor=\"end\">" + tick_label(yv) +
             "</text>\n";
    }
    s += "<text x=\"" + num(kLeft + (kWidth - kLeft - kRight) / 2) + "\" y=\"" + num(kHeight - 15) +
         "\" text-anchor=\"middle\">" + escape(axes.x_label) + "</text>\n";
    s += "<text x=\"18\" y=\"" + num(kTop + (kHeight - kTop - kBottom) / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + num(kTop + (kHeight - kTop - kBottom) / 2) +
         ")\">" + escape(axes.y_label) + "</text>\n";
    return s;
}

void pad(double& lo, double& hi)
{
    if (hi <= lo) {
        const double d = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
        lo -= d;
        hi += d;
    }
}

} // namespace

std::array<std::uint8_t, 3> colormap(double value)
{
    static constexpr std::array<std::array<double, 3>, 5> anchors = {{
        {0x00, 0x00, 0x04},
        {0x51, 0x12, 0x7c},
        {0xb7, 0x37, 0x79},
        {0xfc, 0x89, 0x61},
        {0xfc, 0xfd, 0xbf},
    }};
    const double v = std::isfinite(value) ? std::clamp(value, 0.0, 1.0) : 0.0;
    const double level = std::round(255.0 * v) / 255.0;
    const double pos = level * 4.0;
    const auto seg = std::min<std::size_t>(3, static_cast<std::size_t>(pos));
    const double frac = pos - static_cast<double>(seg);
    std::array<std::uint8_t, 3> rgb{};
    for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<std::uint8_t>(
            std::lround(anchors[seg][c] + frac * (anchors[seg + 1][c] - anchors[seg][c])));
    return rgb;
}

std::string line_chart(const std::vector<Series>& series, const Axes& axes)
{
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw InputError("series x and y lengths differ");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0))
        throw InputError("nothing to plot");
    if (axes.log_x && x0 <= 0.0)
        throw InputError("log axis needs positive x");
    pad(x0, x1);
    pad(y0, y1);
    const double margin = 0.05 * (y1 - y0);
    const Frame f{x0, x1, y0 - margin, y1 + margin, axes.log_x};

    std::string svg = header() + decorations(f, axes);
    double legend_y = kTop + 16;
    for (const auto& s : series) {
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                points += num(f.px(s.x[i])) + "," + num(f.py(s.y[i])) + " ";
        if (s.line)
            svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\" points=\"" + points +
                   "\"/>\n";
        if (s.markers)
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                    svg += "<circle cx=\"" + num(f.px(s.x[i])) + "\" cy=\"" + num(f.py(s.y[i])) +
                           "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
        if (!s.label.empty()) {
            svg += "<line x1=\"" + num(kWidth - kRight - 150) + "\" y1=\"" + num(legend_y - 4) + "\" x2=\"" +
                   num(kWidth - kRight - 130) + "\" y2=\"" + num(legend_y - 4) + "\" stroke=\"" + s.color +
                   "\" stroke-width=\"2\"/>\n";
            svg += "<text x=\"" + num(kWidth - kRight - 125) + "\" y=\"" + num(legend_y) + "\">" +
                   escape(s.label) + "</text>\n";
            legend_y += 16;
        }
    }
    return svg + "</svg>\n";
}

std::string heatmap(const Eigen::MatrixXd& z, double x_min, double x_max, double y_min, double y_max,
                    const Axes& axes, int max_cells)
{
    if (z.size() == 0 || max_cells < 1)
        throw InputError("empty heatmap");
    const auto nx = z.rows();
    const auto ny = z.cols();
    const auto bx = (nx + max_cells - 1) / max_cells;
    const auto by = (ny + max_cells - 1) / max_cells;
    const auto cx = (nx + bx - 1) / bx;
    const auto cy = (ny + by - 1) / by;

    Eigen::MatrixXd cells = Eigen::MatrixXd::Zero(cx, cy);
    for (Eigen::Index i = 0; i < cx; ++i)
        for (Eigen::Index j = 0; j < cy; ++j) {
            const auto rows = std::min(bx, nx - i * bx);
            const auto cols = std::min(by, ny - j * by);
            cells(i, j) = z.block(i * bx, j * by, rows, cols).mean();
        }
    const double lo = cells.minCoeff();
    const double hi = cells.maxCoeff();
    const double range = hi > lo ? hi - lo : 1.0;

    const Frame f{x_min, x_max, y_min, y_max, false};
    std::string svg = header();
    const double w = (kWidth - kLeft - kRight) / static_cast<double>(cx);
    const double h = (kHeight - kTop - kBottom) / static_cast<double>(cy);
    char colour[8];
    for (Eigen::Index i = 0; i < cx; ++i)
        for (Eigen::Index j = 0; j < cy; ++j) {
            const auto rgb = colormap((cells(i, j) - lo) / range);
            std::snprintf(colour, sizeof colour, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
            svg += "<rect x=\"" + num(kLeft + static_cast<double>(i) * w) + "\" y=\"" +
                   num(kHeight - kBottom - static_cast<double>(j + 1) * h) + "\" width=\"" + num(w + 0.05) +
                   "\" height=\"" + num(h + 0.05) + "\" fill=\"" + colour + "\"/>\n";
        }
    svg += decorations(f, axes);
    return svg + "</svg>\n";
}

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const Axes& axes, double y_min, double y_max)
{
    if (labels.size() != values.size() || labels.empty())
        throw InputError("bar chart needs one label per value");
    const auto n = static_cast<double>(values.size());
    const Frame f{0.0, n, y_min, y_max, false};
    std::string svg = header();
    svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
           escape(axes.title) + "</text>\n";
    svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kWidth - kLeft - kRight) +
           "\" height=\"" + num(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = y_min + k * (y_max - y_min) / 4.0;
        svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(f.py(yv) + 4) + "\" text-anchor=\"end\">" +
               tick_label(yv) + "</text>\n";
    }
    const double slot = (kWidth - kLeft - kRight) / n;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = std::clamp(values[i], y_min, y_max);
        const double x = kLeft + static_cast<double>(i) * slot + 0.15 * slot;
        svg += "<rect x=\"" + num(x) + "\" y=\"" + num(f.py(v)) + "\" width=\"" + num(0.7 * slot) +
               "\" height=\"" + num(f.py(y_min) - f.py(v)) + "\" fill=\"#51127c\"/>\n";
        svg += "<text x=\"" + num(x + 0.35 * slot) + "\" y=\"" + num(kHeight - kBottom + 18) +
               "\" text-anchor=\"middle\">" + escape(labels[i]) + "</text>\n";
        svg += "<text x=\"" + num(x + 0.35 * slot) + "\" y=\"" + num(f.py(v) - 4) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + tick_label(values[i]) + "</text>\n";
    }
    svg += "<text x=\"" + num(kLeft + (kWidth - kLeft - kRight) / 2) + "\" y=\"" + num(kHeight - 15) +
           "\" text-anchor=\"middle\">" + escape(axes.x_label) + "</text>\n";
    svg += "<text x=\"18\" y=\"" + num(kTop + (kHeight - kTop - kBottom) / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + num(kTop + (kHeight - kTop - kBottom) / 2) +
           ")\">" + escape(axes.y_label) + "</text>\n";
    return svg + "</svg>\n";
}

} // namespace qisim::cli::plot
