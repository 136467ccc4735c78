#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "cs2/common.hpp"
#include "cs2/metrics.hpp"

namespace cs2 {

// Minimal static SVG of r2_mean vs snr_db with a +/- 1 std band: band
// polygon, mean polyline, axes with ticks. No interactivity by design.
inline std::string render_sweep_svg(const SweepResult& sweep) {
    if (sweep.grid.empty())
        fail(ErrorKind::Computation, "render_sweep_svg", "empty sweep grid");

    const double W = 640.0, H = 420.0;
    const double ml = 64.0, mr = 24.0, mt = 24.0, mb = 48.0;

    double x_lo = sweep.grid.front().snr_db, x_hi = x_lo;
    double y_lo = 0.0, y_hi = 1.0;
    for (const auto& pt : sweep.grid) {
        x_lo = std::min(x_lo, pt.snr_db);
        x_hi = std::max(x_hi, pt.snr_db);
        y_lo = std::min(y_lo, pt.r2_mean - pt.r2_std);
        y_hi = std::max(y_hi, pt.r2_mean + pt.r2_std);
    }
    if (x_hi == x_lo) x_hi = x_lo + 1.0;
    const double pad = 0.05 * (y_hi - y_lo == 0.0 ? 1.0 : y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    auto sx = [&](double v) {
        return ml + (v - x_lo) / (x_hi - x_lo) * (W - ml - mr);
    };
    auto sy = [&](double v) {
        return H - mb - (v - y_lo) / (y_hi - y_lo) * (H - mt - mb);
    };
    auto num = [](double v) {
        std::ostringstream s;
        s << v;
        return s.str();
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
        << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
        << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H
        << "\" fill=\"white\"/>\n";

    // +/- 1 std band: upper edge left-to-right, lower edge back.
    svg << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" "
           "points=\"";
    for (const auto& pt : sweep.grid)
        svg << sx(pt.snr_db) << ',' << sy(pt.r2_mean + pt.r2_std) << ' ';
    for (auto it = sweep.grid.rbegin(); it != sweep.grid.rend(); ++it)
        svg << sx(it->snr_db) << ',' << sy(it->r2_mean - it->r2_std) << ' ';
    svg << "\"/>\n";

    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" "
           "points=\"";
    for (const auto& pt : sweep.grid)
        svg << sx(pt.snr_db) << ',' << sy(pt.r2_mean) << ' ';
    svg << "\"/>\n";
    for (const auto& pt : sweep.grid)
        svg << "<circle cx=\"" << sx(pt.snr_db) << "\" cy=\"" << sy(pt.r2_mean)
            << "\" r=\"3\" fill=\"#1f77b4\"/>\n";

    // Axes.
    svg << "<line x1=\"" << ml << "\" y1=\"" << (H - mb) << "\" x2=\""
        << (W - mr) << "\" y2=\"" << (H - mb)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
        << "\" y2=\"" << (H - mb)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

    // X ticks at the grid points, Y ticks at 5 even divisions.
    for (const auto& pt : sweep.grid) {
        const double x = sx(pt.snr_db);
        svg << "<line x1=\"" << x << "\" y1=\"" << (H - mb) << "\" x2=\"" << x
            << "\" y2=\"" << (H - mb + 5) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << x << "\" y=\"" << (H - mb + 20)
            << "\" font-size=\"12\" text-anchor=\"middle\">" << num(pt.snr_db)
            << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double v = y_lo + (y_hi - y_lo) * i / 5.0;
        const double y = sy(v);
        svg << "<line x1=\"" << (ml - 5) << "\" y1=\"" << y << "\" x2=\"" << ml
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << (ml - 8) << "\" y=\"" << (y + 4)
            << "\" font-size=\"12\" text-anchor=\"end\">"
            << num(std::round(v * 100.0) / 100.0) << "</text>\n";
    }

    svg << "<text x=\"" << (ml + (W - ml - mr) / 2) << "\" y=\"" << (H - 10)
        << "\" font-size=\"14\" text-anchor=\"middle\">SNR (dB)</text>\n";
    svg << "<text x=\"16\" y=\"" << (mt + (H - mt - mb) / 2)
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 "
           "16 "
        << (mt + (H - mt - mb) / 2) << ")\">R&#178;</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace cs2
