#ifndef RSEG_SVG_HPP
#define RSEG_SVG_HPP

#include <string>
#include <vector>

#include "rseg/tensor.hpp"

namespace rseg {

// Dependency-free SVG renderings; the CSV next to each plot is the testable
// artifact, these are for humans.
std::string svg_line_chart(const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::string& title);
std::string svg_bar_chart(const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::string& title);
// One stacked bar per row; each row is a probability vector.
std::string svg_stacked_bars(const std::vector<std::vector<double>>& rows,
                             const std::string& title);
std::string svg_heatmap(const Tensor<float>& raster, const std::string& title);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace rseg

#endif
