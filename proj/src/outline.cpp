#include "sceneforge/outline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace sceneforge {

namespace {

inline int nearest(double v) { return static_cast<int>(std::lround(v)); }

inline bool anchor_in_bounds(const BinaryMask& mask, Point p) {
    return p.x >= 0.0 && p.x <= mask.width() - 1 && p.y >= 0.0 &&
           p.y <= mask.height() - 1;
}

inline bool sample(const BinaryMask& mask, double x, double y) {
    const int px = nearest(x), py = nearest(y);
    return mask.in_bounds(px, py) && mask.at(px, py);
}

inline bool sample_in_image(const BinaryMask& mask, double x, double y) {
    return mask.in_bounds(nearest(x), nearest(y));
}

} // namespace

Point mass_center(const BinaryMask& mask) {
    std::int64_t sx = 0, sy = 0, count = 0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            sx += x;
            sy += y;
            ++count;
        }
    }
    if (count == 0) throw EmptyMask("mass_center: mask has no foreground pixel");
    return {static_cast<double>(sx) / count, static_cast<double>(sy) / count};
}

PolarOutline ray_distances(const BinaryMask& mask, Point anchor, int k) {
    if (k < 3) throw Error("ray_distances: need at least 3 directions");
    if (!mask.any()) throw EmptyMask("ray_distances: mask has no foreground pixel");
    if (!anchor_in_bounds(mask, anchor))
        throw OutOfBounds("ray_distances: anchor outside image bounds");
    if (!mask.at(nearest(anchor.x), nearest(anchor.y)))
        throw AnchorOutsideMask("ray_distances: pixel nearest the anchor is background");

    constexpr double kCoarseStep = 0.25;
    constexpr double kFineStep = 0.05;

    PolarOutline outline;
    outline.anchor = anchor;
    outline.distances.resize(k);

    for (int dir = 0; dir < k; ++dir) {
        const double theta = 2.0 * std::numbers::pi * dir / k;
        const double cx = std::cos(theta), cy = std::sin(theta);

        // coarse march to the image border, remembering the outermost
        // foreground sample
        double last_true = 0.0;
        for (int step = 0;; ++step) {
            const double t = step * kCoarseStep;
            const double x = anchor.x + t * cx, y = anchor.y + t * cy;
            if (!sample_in_image(mask, x, y)) break;
            if (mask.at(nearest(x), nearest(y))) last_true = t;
        }

        // refine within the bracket past the last true sample
        double refined = last_true;
        for (int j = 1; j < 5; ++j) {
            const double t = last_true + j * kFineStep;
            if (sample(mask, anchor.x + t * cx, anchor.y + t * cy)) refined = t;
        }
        outline.distances[dir] = refined;
    }
    return outline;
}

std::vector<PolarOutline> jittered_samples(const BinaryMask& mask, Point center,
                                           double jitter_radius, int n,
                                           SplitMix64& rng, int k) {
    if (jitter_radius < 0) throw Error("jittered_samples: jitter_radius must be >= 0");
    if (n < 0) throw Error("jittered_samples: n must be >= 0");

    std::vector<PolarOutline> out;
    out.reserve(static_cast<std::size_t>(n));
    int consecutive_rejections = 0;
    while (static_cast<int>(out.size()) < n) {
        double dx = 0.0, dy = 0.0;
        do {
            dx = rng.next_in(-jitter_radius, jitter_radius);
            dy = rng.next_in(-jitter_radius, jitter_radius);
        } while (dx * dx + dy * dy > jitter_radius * jitter_radius);

        const Point anchor{center.x + dx, center.y + dy};
        if (!anchor_in_bounds(mask, anchor) ||
            !mask.at(nearest(anchor.x), nearest(anchor.y))) {
            if (++consecutive_rejections >= 100)
                throw JitterExhausted("jittered_samples: 100 consecutive anchors left the mask");
            continue;
        }
        consecutive_rejections = 0;
        out.push_back(ray_distances(mask, anchor, k));
    }
    return out;
}

Polygon outline_to_polygon(const PolarOutline& outline) {
    Polygon poly;
    const int k = outline.k();
    poly.vertices.reserve(static_cast<std::size_t>(k));
    for (int dir = 0; dir < k; ++dir) {
        const double theta = 2.0 * std::numbers::pi * dir / k;
        poly.vertices.push_back({outline.anchor.x + outline.distances[dir] * std::cos(theta),
                                 outline.anchor.y + outline.distances[dir] * std::sin(theta)});
    }
    return poly;
}

namespace {

// Edge crossings with the horizontal line at y, half-open in y so a scanline
// through a vertex is counted once.
void edge_crossings(const Polygon& poly, double y, std::vector<double>& xs) {
    xs.clear();
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % n];
        if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y))
            xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
}

} // namespace

BinaryMask rasterize_polygon(const Polygon& poly, int width, int height) {
    if (poly.vertices.size() < 3)
        throw DegeneratePolygon("rasterize_polygon: polygon needs at least 3 vertices");
    BinaryMask out(width, height);

    std::vector<double> xs;
    for (int y = 0; y < height; ++y) {
        edge_crossings(poly, static_cast<double>(y), xs);
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            // pixels with xa <= x < xb
            int x0 = static_cast<int>(std::ceil(xs[i]));
            int x1 = static_cast<int>(std::ceil(xs[i + 1])) - 1;
            x0 = std::max(x0, 0);
            x1 = std::min(x1, width - 1);
            for (int x = x0; x <= x1; ++x) out.set(x, y, true);
        }
    }
    return out;
}

bool point_in_polygon(const Polygon& poly, Point p) {
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    int crossings = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % n];
        if ((a.y <= p.y && p.y < b.y) || (b.y <= p.y && p.y < a.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (x > p.x) ++crossings;
        }
    }
    return (crossings % 2) == 1;
}

PolygonMetrics polygon_metrics(const Polygon& poly) {
    if (poly.vertices.size() < 3)
        throw DegeneratePolygon("polygon_metrics: polygon needs at least 3 vertices");

    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();
    double shoelace = 0.0;

    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % n];
        min_x = std::min(min_x, a.x);
        min_y = std::min(min_y, a.y);
        max_x = std::max(max_x, a.x);
        max_y = std::max(max_y, a.y);
        shoelace += a.x * b.y - b.x * a.y;
    }

    const double area = std::abs(shoelace) / 2.0;
    if (area == 0.0) throw DegeneratePolygon("polygon_metrics: zero area");
    return {{min_x, min_y, max_x - min_x, max_y - min_y}, area};
}

} // namespace sceneforge
