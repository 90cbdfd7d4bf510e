#pragma once

#include <string>
#include <vector>

namespace delaysa {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Line plot with a log10 y axis; non-positive or non-finite points are dropped.
std::string log_plot_svg(const std::vector<PlotSeries>& series, const std::string& title,
                         const std::string& xlabel, const std::string& ylabel);
void write_log_plot(const std::string& path, const std::vector<PlotSeries>& series, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel);

}  // namespace delaysa
