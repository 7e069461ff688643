#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "phyauth/errors.hpp"

namespace phyauth {

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

// Self-contained line/scatter plot, one polyline per series. CSVs are the
// ground truth for every experiment; these plots are a convenience view.
inline void write_svg_plot(const std::string& path, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           const std::vector<SvgSeries>& series, bool log_y = false) {
    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                     "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    constexpr double W = 840, H = 560, L = 80, R = 30, T = 50, B = 70;

    auto ty = [log_y](double y) { return log_y ? std::log10(std::max(y, 1e-12)) : y; };

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, ty(y));
            ymax = std::max(ymax, ty(y));
        }
    }
    if (!(xmin < xmax)) xmax = xmin + 1.0;
    if (!(ymin < ymax)) ymax = ymin + 1.0;

    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (ty(y) - ymin) / (ymax - ymin) * (H - T - B); };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot open SVG output: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\" "
           "font-family=\"sans-serif\">" << title << "</text>\n";

    // Axes and ticks.
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 5.0;
        const double fy = ymin + (ymax - ymin) * i / 5.0;
        char buf[32];
        out << "<line x1=\"" << px(fx) << "\" y1=\"" << H - B << "\" x2=\"" << px(fx) << "\" y2=\""
            << H - B + 5 << "\" stroke=\"black\"/>\n";
        std::snprintf(buf, sizeof(buf), "%.4g", fx);
        out << "<text x=\"" << px(fx) << "\" y=\"" << H - B + 20
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << buf
            << "</text>\n";
        const double yval = log_y ? std::pow(10.0, fy) : fy;
        std::snprintf(buf, sizeof(buf), "%.3g", yval);
        const double ypix = H - B - (fy - ymin) / (ymax - ymin) * (H - T - B);
        out << "<line x1=\"" << L - 5 << "\" y1=\"" << ypix << "\" x2=\"" << L << "\" y2=\"" << ypix
            << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << L - 8 << "\" y=\"" << ypix + 4
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << buf
            << "</text>\n";
    }
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 25
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label
        << "</text>\n"
        << "<text x=\"20\" y=\"" << (T + H - B) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 20 " << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[s].points) out << px(x) << ',' << py(y) << ' ';
        out << "\"/>\n";
        const double ly = T + 18.0 * static_cast<double>(s);
        out << "<line x1=\"" << W - R - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - R - 125
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << W - R - 120 << "\" y=\"" << ly + 4
            << "\" font-size=\"11\" font-family=\"sans-serif\">" << series[s].label << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace phyauth
