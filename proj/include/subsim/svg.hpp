#ifndef SUBSIM_SVG_HPP
#define SUBSIM_SVG_HPP

#include "subsim/types.hpp"

#include <string>
#include <vector>

namespace subsim {

/// One polyline of a line chart.
struct PlotSeries {
    std::string label;
    Vector x;
    Vector y;
};

/// Renders labeled line series to a standalone SVG file. Log axes drop
/// non-positive points.
void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
                    const std::string& x_label, const std::string& y_label, bool log_x,
                    bool log_y);

/// Reads a TSV curve table (first column = x, remaining columns = series)
/// and renders it; series labels come from the header row.
void plot_table_file(const std::string& table_path, const std::string& svg_path, bool log_x,
                     bool log_y);

} // namespace subsim

#endif
