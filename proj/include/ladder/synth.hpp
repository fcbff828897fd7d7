#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "ladder/mnist.hpp"
#include "ladder/random.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

/// Deterministic stand-in digit images for environments without the real
/// dataset files: ten stroke skeletons rendered at 28x28 under random
/// rotation, scale, shear, translation and stroke width. Sample i is drawn
/// from stream split(i), so any prefix of the set is stable. Classes cycle
/// i mod 10.
namespace synth {

struct Point {
    double x, y;
};
using Polyline = std::vector<Point>;

inline Polyline arc(double cx, double cy, double rx, double ry, double a0, double a1, int n = 18) {
    Polyline p;
    for (int i = 0; i <= n; ++i) {
        const double a = a0 + (a1 - a0) * i / n;
        p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return p;
}

/// Stroke skeletons in [0,1]^2, y growing downward.
inline const std::vector<std::vector<Polyline>>& skeletons() {
    static const std::vector<std::vector<Polyline>> shapes = [] {
        constexpr double pi = 3.14159265358979323846;
        std::vector<std::vector<Polyline>> s(10);
        s[0] = {arc(.50, .50, .30, .40, 0, 2 * pi, 28)};
        s[1] = {{{.50, .10}, {.50, .90}}, {{.50, .10}, {.34, .28}}};
        s[2] = {arc(.50, .32, .26, .22, pi, 2 * pi + .35, 14),
                {{.74, .40}, {.24, .88}},
                {{.24, .88}, {.78, .88}}};
        s[3] = {arc(.48, .30, .24, .20, pi * .85, 2 * pi + pi * .45, 14),
                arc(.48, .68, .26, .22, -pi * .45, pi * .85, 14)};
        s[4] = {{{.60, .10}, {.20, .60}}, {{.20, .60}, {.82, .60}}, {{.60, .10}, {.60, .90}}};
        s[5] = {{{.74, .12}, {.30, .12}},
                {{.30, .12}, {.28, .48}},
                arc(.48, .66, .24, .22, -pi / 2, pi * .75, 16)};
        s[6] = {{{.66, .10}, {.36, .52}}, arc(.48, .68, .20, .20, 0, 2 * pi, 22)};
        s[7] = {{{.22, .12}, {.80, .12}}, {{.80, .12}, {.42, .90}}};
        s[8] = {arc(.50, .30, .19, .18, 0, 2 * pi, 20), arc(.50, .68, .23, .21, 0, 2 * pi, 20)};
        s[9] = {arc(.50, .32, .20, .20, 0, 2 * pi, 22), {{.70, .34}, {.60, .90}}};
        return s;
    }();
    return shapes;
}

inline double dist_to_segment(double px, double py, const Point& a, const Point& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double wx = px - a.x, wy = py - a.y;
    const double vv = vx * vx + vy * vy;
    double t = vv > 0 ? (wx * vx + wy * vy) / vv : 0;
    t = std::min(1.0, std::max(0.0, t));
    const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

/// Renders one sample into a 784-value row, values in [0, 1].
inline void render(Rng& rng, int digit, double* out) {
    const auto& shape = skeletons()[static_cast<std::size_t>(digit)];

    const double angle = 0.25 * (2 * rng.next_double() - 1);
    const double sx = std::exp(0.10 * (2 * rng.next_double() - 1));
    const double sy = std::exp(0.10 * (2 * rng.next_double() - 1));
    const double shear = 0.12 * (2 * rng.next_double() - 1);
    const double tx = 0.06 * (2 * rng.next_double() - 1);
    const double ty = 0.06 * (2 * rng.next_double() - 1);
    const double thickness = 1.0 + 0.9 * rng.next_double();   // pixels
    const double intensity = 0.75 + 0.25 * rng.next_double();

    const double ca = std::cos(angle), sa = std::sin(angle);
    auto map = [&](Point p) {
        double x = (p.x - .5) * sx, y = (p.y - .5) * sy;
        x += shear * y;
        const double rx = ca * x - sa * y, ry = sa * x + ca * y;
        return Point{4.0 + 20.0 * (rx + .5 + tx), 4.0 + 20.0 * (ry + .5 + ty)};
    };

    std::vector<std::pair<Point, Point>> segs;
    for (const auto& line : shape)
        for (std::size_t i = 0; i + 1 < line.size(); ++i)
            segs.emplace_back(map(line[i]), map(line[i + 1]));

    for (int r = 0; r < 28; ++r)
        for (int c = 0; c < 28; ++c) {
            const double px = c + .5, py = r + .5;
            double d = 1e9;
            for (const auto& [a, b] : segs) d = std::min(d, dist_to_segment(px, py, a, b));
            const double v = intensity * std::min(1.0, std::max(0.0, thickness + 0.5 - d));
            // Quantize like the byte container would.
            out[r * 28 + c] = std::round(v * 255.0) / 255.0;
        }
}

} // namespace synth

template <typename S>
Dataset<S> synthetic_digits(std::uint64_t seed, index_t count) {
    Dataset<S> data;
    data.images = Tensor<S>(count, 784);
    data.labels.resize(static_cast<std::size_t>(count));
    Rng base(seed);
    std::array<double, 784> row{};
    for (index_t i = 0; i < count; ++i) {
        const int digit = static_cast<int>(i % 10);
        Rng stream = base.split(static_cast<std::uint64_t>(i));
        synth::render(stream, digit, row.data());
        for (index_t j = 0; j < 784; ++j) data.images(i, j) = static_cast<S>(row[static_cast<std::size_t>(j)]);
        data.labels[static_cast<std::size_t>(i)] = digit;
    }
    return data;
}

} // namespace ladder
