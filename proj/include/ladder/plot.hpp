#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ladder/errors.hpp"
#include "ladder/train.hpp"

namespace ladder {

/// Held-out error vs eta as a static SVG: mean curve with +/- one sample
/// standard deviation error bars. Eta positions are categorical (evenly
/// spaced in list order) so eta = 0 sits on the axis naturally.
inline std::string sweep_svg(const std::vector<SweepRow>& rows) {
    if (rows.empty()) throw value_error("sweep_svg: no rows");
    const double width = 640, height = 420;
    const double ml = 64, mr = 24, mt = 28, mb = 48;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double lo = 1e300, hi = -1e300;
    for (const auto& r : rows) {
        lo = std::min(lo, r.mean_error_pct - r.stdev_error_pct);
        hi = std::max(hi, r.mean_error_pct + r.stdev_error_pct);
    }
    const double pad = std::max(0.05, (hi - lo) * 0.15);
    lo = std::max(0.0, lo - pad);
    hi += pad;

    const auto n = rows.size();
    auto xpos = [&](std::size_t i) {
        return n == 1 ? ml + pw / 2 : ml + pw * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    auto ypos = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "' viewBox='0 0 " << width << " " << height << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<line x1='" << ml << "' y1='" << mt + ph << "' x2='" << ml + pw << "' y2='" << mt + ph
        << "' stroke='black'/>\n"
        << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << mt + ph
        << "' stroke='black'/>\n";

    for (int tick = 0; tick <= 4; ++tick) {
        const double v = lo + (hi - lo) * tick / 4.0;
        const double y = ypos(v);
        std::ostringstream label;
        label.precision(3);
        label << v;
        svg << "<line x1='" << ml - 4 << "' y1='" << y << "' x2='" << ml << "' y2='" << y
            << "' stroke='black'/>\n"
            << "<text x='" << ml - 8 << "' y='" << y + 4
            << "' font-size='12' text-anchor='end'>" << label.str() << "</text>\n";
    }

    std::ostringstream path;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = xpos(i), ym = ypos(rows[i].mean_error_pct);
        const double yl = ypos(rows[i].mean_error_pct - rows[i].stdev_error_pct);
        const double yu = ypos(rows[i].mean_error_pct + rows[i].stdev_error_pct);
        path << (i == 0 ? "M" : "L") << x << " " << ym << " ";
        svg << "<line x1='" << x << "' y1='" << yl << "' x2='" << x << "' y2='" << yu
            << "' stroke='steelblue' stroke-width='1.5'/>\n"
            << "<line x1='" << x - 4 << "' y1='" << yl << "' x2='" << x + 4 << "' y2='" << yl
            << "' stroke='steelblue'/>\n"
            << "<line x1='" << x - 4 << "' y1='" << yu << "' x2='" << x + 4 << "' y2='" << yu
            << "' stroke='steelblue'/>\n"
            << "<circle cx='" << x << "' cy='" << ym << "' r='3' fill='steelblue'/>\n";
        std::ostringstream label;
        label << rows[i].eta;
        svg << "<text x='" << x << "' y='" << mt + ph + 18
            << "' font-size='12' text-anchor='middle'>" << label.str() << "</text>\n";
    }
    svg << "<path d='" << path.str() << "' fill='none' stroke='steelblue' stroke-width='1.5'/>\n"
        << "<text x='" << ml + pw / 2 << "' y='" << height - 10
        << "' font-size='13' text-anchor='middle'>auxiliary cost multiplier</text>\n"
        << "<text x='16' y='" << mt + ph / 2
        << "' font-size='13' text-anchor='middle' transform='rotate(-90 16 " << mt + ph / 2
        << ")'>held-out error %</text>\n"
        << "</svg>\n";
    return svg.str();
}

inline void write_sweep_svg(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot write " + path);
    out << sweep_svg(rows);
}

} // namespace ladder
