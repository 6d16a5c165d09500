#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pgsim {

struct LineSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal standalone SVG line chart: axes with min/max tick labels, one
/// polyline per series and a legend.
void write_svg_chart(std::ostream& out, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<LineSeries>& series);

}  // namespace pgsim
