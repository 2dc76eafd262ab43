#pragma once

#include <array>
#include <vector>

#include "sceneforge/image.hpp"
#include "sceneforge/rng.hpp"

namespace sceneforge {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

// Closed polygon; the last vertex connects back to the first implicitly.
struct Polygon {
    std::vector<Point> vertices;
};

// Anchor point plus K boundary distances. Direction k points along angle
// theta_k = 2*pi*k/K, measured from +x toward +y.
struct PolarOutline {
    Point anchor;
    std::vector<double> distances;

    int k() const { return static_cast<int>(distances.size()); }

    bool operator==(const PolarOutline&) const = default;
};

// Arithmetic mean of true-pixel coordinates. Throws EmptyMask.
Point mass_center(const BinaryMask& mask);

// Distance from the anchor to the outermost foreground sample along each of
// the k directions. Rays are sampled at 0.25 px out to the image border, then
// refined at 0.05 px around the last true sample. The anchor must lie inside
// the image and its nearest pixel must be foreground.
PolarOutline ray_distances(const BinaryMask& mask, Point anchor, int k = 16);

// n outlines whose anchors are center + uniform offsets in a disc of
// jitter_radius; offsets that land the anchor outside the mask are resampled.
// Throws JitterExhausted after 100 consecutive rejections.
std::vector<PolarOutline> jittered_samples(const BinaryMask& mask, Point center,
                                           double jitter_radius, int n,
                                           SplitMix64& rng, int k = 16);

// Vertex per direction: anchor + d_k * (cos theta_k, sin theta_k).
Polygon outline_to_polygon(const PolarOutline& outline);

// Scanline even-odd fill; a pixel is set iff its center is inside the
// polygon. Geometry outside the image is clipped.
BinaryMask rasterize_polygon(const Polygon& poly, int width, int height);

// Even-odd point-in-polygon test matching rasterize_polygon's convention:
// edges counted under the half-open rule (y1 <= y < y2), crossings strictly
// to the right of the point.
bool point_in_polygon(const Polygon& poly, Point p);

struct PolygonMetrics {
    std::array<double, 4> bbox; // x, y, w, h
    double area;                // |shoelace| / 2
};

// Throws DegeneratePolygon when the area is zero.
PolygonMetrics polygon_metrics(const Polygon& poly);

} // namespace sceneforge
