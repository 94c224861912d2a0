#include "subsim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace subsim {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kMarginL = 70, kMarginR = 160, kMarginT = 20, kMarginB = 50;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

struct AxisMap {
    double lo = 0.0, hi = 1.0;
    bool log_scale = false;
    double pix0 = 0.0, pix1 = 1.0;

    double to_pix(double v) const {
        const double a = log_scale ? std::log10(v) : v;
        const double a0 = log_scale ? std::log10(lo) : lo;
        const double a1 = log_scale ? std::log10(hi) : hi;
        const double f = a1 == a0 ? 0.5 : (a - a0) / (a1 - a0);
        return pix0 + f * (pix1 - pix0);
    }

    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log_scale) {
            const int e0 = static_cast<int>(std::floor(std::log10(lo)));
            const int e1 = static_cast<int>(std::ceil(std::log10(hi)));
            for (int e = e0; e <= e1; ++e) {
                const double v = std::pow(10.0, e);
                if (v >= lo * 0.999 && v <= hi * 1.001) out.push_back(v);
            }
            if (out.empty()) out = {lo, hi};
        } else {
            const double span = hi - lo;
            const double step = std::pow(10.0, std::floor(std::log10(span / 4.0)));
            const double mult = span / step > 8.0 ? 2.0 : 1.0;
            for (double v = std::ceil(lo / (step * mult)) * step * mult; v <= hi + 1e-12 * span;
                 v += step * mult)
                out.push_back(v);
        }
        return out;
    }
};

} // namespace

void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
                    const std::string& x_label, const std::string& y_label, bool log_x,
                    bool log_y) {
    if (series.empty()) throw std::invalid_argument("write_svg_plot: no series");

    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    bool any = false;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("write_svg_plot: ragged series");
        for (Index i = 0; i < s.x.size(); ++i) {
            if ((log_x && !(s.x[i] > 0.0)) || (log_y && !(s.y[i] > 0.0))) continue;
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, s.y[i]);
            y_hi = std::max(y_hi, s.y[i]);
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("write_svg_plot: no plottable points");
    if (x_lo == x_hi) {
        x_lo *= 0.9;
        x_hi = x_hi == 0.0 ? 1.0 : x_hi * 1.1;
    }
    if (y_lo == y_hi) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    if (!log_y) {
        const double pad = 0.05 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;
    }

    AxisMap xm{x_lo, x_hi, log_x, kMarginL, kWidth - kMarginR};
    AxisMap ym{y_lo, y_hi, log_y, kHeight - kMarginB, kMarginT};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // axes box
    svg << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\""
        << kWidth - kMarginL - kMarginR << "\" height=\"" << kHeight - kMarginT - kMarginB
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : xm.ticks()) {
        const double px = xm.to_pix(t);
        svg << "<line x1=\"" << px << "\" y1=\"" << kHeight - kMarginB << "\" x2=\"" << px
            << "\" y2=\"" << kHeight - kMarginB + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << px << "\" y=\"" << kHeight - kMarginB + 18
            << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    for (double t : ym.ticks()) {
        const double py = ym.to_pix(t);
        svg << "<line x1=\"" << kMarginL - 5 << "\" y1=\"" << py << "\" x2=\"" << kMarginL
            << "\" y2=\"" << py << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << kMarginL - 8 << "\" y=\"" << py + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    }
    svg << "<text x=\"" << (kMarginL + kWidth - kMarginR) / 2 << "\" y=\"" << kHeight - 12
        << "\" font-size=\"13\" text-anchor=\"middle\">" << x_label << "</text>\n";
    svg << "<text x=\"16\" y=\"" << (kMarginT + kHeight - kMarginB) / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << (kMarginT + kHeight - kMarginB) / 2 << ")\">" << y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
        std::ostringstream pts;
        for (Index i = 0; i < series[s].x.size(); ++i) {
            const double xv = series[s].x[i], yv = series[s].y[i];
            if ((log_x && !(xv > 0.0)) || (log_y && !(yv > 0.0))) continue;
            if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
            pts << xm.to_pix(xv) << ',' << ym.to_pix(yv) << ' ';
        }
        svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.6\"/>\n";
        const double ly = kMarginT + 16 + 18 * static_cast<double>(s);
        svg << "<line x1=\"" << kWidth - kMarginR + 10 << "\" y1=\"" << ly << "\" x2=\""
            << kWidth - kMarginR + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kWidth - kMarginR + 40 << "\" y=\"" << ly + 4
            << "\" font-size=\"12\">" << series[s].label << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << svg.str();
}

void plot_table_file(const std::string& table_path, const std::string& svg_path, bool log_x,
                     bool log_y) {
    std::ifstream in(table_path);
    if (!in) throw std::runtime_error("cannot open table: " + table_path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(table_path + ": empty table");

    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string tok;
        while (std::getline(hs, tok, '\t')) header.push_back(tok);
    }
    if (header.size() < 2) throw std::runtime_error(table_path + ": need at least two columns");

    std::vector<std::vector<double>> cols(header.size());
    Index line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tok;
        std::size_t c = 0;
        while (std::getline(ls, tok, '\t')) {
            if (c >= cols.size())
                throw std::runtime_error(table_path + ":" + std::to_string(line_no) +
                                         ": too many columns");
            try {
                cols[c].push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw std::runtime_error(table_path + ":" + std::to_string(line_no) +
                                         ": non-numeric field '" + tok + "'");
            }
            ++c;
        }
        if (c != cols.size())
            throw std::runtime_error(table_path + ":" + std::to_string(line_no) +
                                     ": wrong column count");
    }
    if (cols[0].empty()) throw std::runtime_error(table_path + ": no data rows");

    std::vector<PlotSeries> series;
    for (std::size_t c = 1; c < cols.size(); ++c) {
        PlotSeries s;
        s.label = header[c];
        s.x = Eigen::Map<const Vector>(cols[0].data(), static_cast<Index>(cols[0].size()));
        s.y = Eigen::Map<const Vector>(cols[c].data(), static_cast<Index>(cols[c].size()));
        series.push_back(std::move(s));
    }
    write_svg_plot(svg_path, series, header[0], cols.size() == 2 ? header[1] : "value", log_x,
                   log_y);
}

} // namespace subsim
