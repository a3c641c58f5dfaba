#include "rseg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rseg {

namespace {

constexpr int kW = 640, kH = 420, kMargin = 50;

void header(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
       << title << "</text>\n";
}

std::pair<double, double> range_of(const std::vector<double>& v) {
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    if (hi <= lo) hi = lo + 1.0;
    return {lo, hi};
}

}  // namespace

std::string svg_line_chart(const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::string& title) {
    if (xs.size() != ys.size() || xs.empty())
        throw std::invalid_argument("svg_line_chart: bad series");
    std::ostringstream os;
    header(os, title);
    const auto [xlo, xhi] = range_of(xs);
    const auto [ylo, yhi] = range_of(ys);
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double px = kMargin + (xs[i] - xlo) / (xhi - xlo) * (kW - 2 * kMargin);
        const double py = kH - kMargin - (ys[i] - ylo) / (yhi - ylo) * (kH - 2 * kMargin);
        os << px << "," << py << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << kMargin << "\" y=\"" << kH - 12 << "\" font-size=\"12\">" << xlo
       << "</text>\n";
    os << "<text x=\"" << kW - kMargin << "\" y=\"" << kH - 12
       << "\" text-anchor=\"end\" font-size=\"12\">" << xhi << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string svg_bar_chart(const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::string& title) {
    if (labels.size() != values.size() || values.empty())
        throw std::invalid_argument("svg_bar_chart: bad series");
    std::ostringstream os;
    header(os, title);
    const auto [lo, hi] = range_of(values);
    const double base = std::min(0.0, lo);
    const double top = std::max(hi, 0.0);
    const double bw = static_cast<double>(kW - 2 * kMargin) / values.size();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double frac = (values[i] - base) / (top - base + 1e-300);
        const double zero_frac = (0.0 - base) / (top - base + 1e-300);
        const double y1 = kH - kMargin - frac * (kH - 2 * kMargin);
        const double y0 = kH - kMargin - zero_frac * (kH - 2 * kMargin);
        os << "<rect x=\"" << kMargin + i * bw + 1 << "\" y=\"" << std::min(y0, y1)
           << "\" width=\"" << bw - 2 << "\" height=\"" << std::abs(y0 - y1)
           << "\" fill=\"steelblue\"/>\n";
        if (values.size() <= 32)
            os << "<text x=\"" << kMargin + (i + 0.5) * bw << "\" y=\"" << kH - 12
               << "\" text-anchor=\"middle\" font-size=\"9\">" << labels[i] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_stacked_bars(const std::vector<std::vector<double>>& rows,
                             const std::string& title) {
    if (rows.empty()) throw std::invalid_argument("svg_stacked_bars: empty");
    const char* colors[] = {"#4878cf", "#d65f5f", "#6acc65", "#b47cc7"};
    std::ostringstream os;
    header(os, title);
    const double bw = static_cast<double>(kW - 2 * kMargin) / rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            const double h = rows[i][c] * (kH - 2 * kMargin);
            const double y = kH - kMargin - (acc + rows[i][c]) * (kH - 2 * kMargin);
            os << "<rect x=\"" << kMargin + i * bw + 1 << "\" y=\"" << y << "\" width=\""
               << bw - 2 << "\" height=\"" << h << "\" fill=\"" << colors[c % 4] << "\"/>\n";
            acc += rows[i][c];
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_heatmap(const Tensor<float>& raster, const std::string& title) {
    if (raster.shape.size() != 2) throw std::invalid_argument("svg_heatmap: want 2-D raster");
    const int h = raster.shape[0], w = raster.shape[1];
    float lo = raster.data[0], hi = raster.data[0];
    for (float v : raster.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0f;
    // downsample large rasters to at most 128 cells per axis
    const int cy = std::max(1, h / 128), cx = std::max(1, w / 128);
    std::ostringstream os;
    header(os, title);
    const double cw = static_cast<double>(kW - 2 * kMargin) / (w / cx);
    const double ch = static_cast<double>(kH - 2 * kMargin) / (h / cy);
    for (int y = 0; y + cy <= h; y += cy)
        for (int x = 0; x + cx <= w; x += cx) {
            const float v = (raster.at2(y, x) - lo) / (hi - lo);
            const int r = static_cast<int>(255 * v);
            const int b = 255 - r;
            os << "<rect x=\"" << kMargin + (x / cx) * cw << "\" y=\"" << kMargin + (y / cy) * ch
               << "\" width=\"" << cw + 0.5 << "\" height=\"" << ch + 0.5 << "\" fill=\"rgb(" << r
               << ",40," << b << ")\"/>\n";
        }
    os << "</svg>\n";
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace rseg
