// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace risgnn {

// One plotted line with optional symmetric error bars.
struct PlotSeries {
    std::string label;
    std::vector<double> x, y, yerr;  // yerr may be empty
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
};

// Renders a static line chart; self-contained SVG, no external assets.
void write_svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series,
                    const std::string& path);

}  // namespace risgnn
