#include "sceneforge/blending.hpp"

#include <algorithm>
#include <cmath>

#include "sceneforge/sparse.hpp"

namespace sceneforge {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

} // namespace

RgbImage poisson_blend(const RgbImage& target, const RgbImage& source,
                       const BlendRegion& region, GuidanceMode mode, double tol,
                       int max_iter) {
    const int w = target.width(), h = target.height();
    if (region.mask.width() != w || region.mask.height() != h)
        throw DimensionMismatch("blend: region mask and target dimensions differ");
    if (!region.mask.any()) throw EmptyMask("blend: region is empty");

    std::vector<int> index(static_cast<std::size_t>(w) * h, -1);
    std::vector<int> pixels;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!region.mask.at(x, y)) continue;
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1)
                throw RegionTouchesBorder("blend: region touches the target border");
            index[static_cast<std::size_t>(y) * w + x] =
                static_cast<int>(pixels.size());
            pixels.push_back(y * w + x);
        }
    }

    // Guidance needs source values on the region and its 4-neighborhood.
    auto source_covers = [&](int x, int y) {
        const int sx = x - region.offset_x, sy = y - region.offset_y;
        return sx >= 0 && sx < source.width() && sy >= 0 && sy < source.height();
    };
    for (const int flat : pixels) {
        const int x = flat % w, y = flat / w;
        for (int k = 0; k < 5; ++k) {
            const int nx = k < 4 ? x + kDx[k] : x, ny = k < 4 ? y + kDy[k] : y;
            if (!source_covers(nx, ny))
                throw OutOfBounds("blend: source does not cover the region");
        }
    }

    const int n = static_cast<int>(pixels.size());
    SparseBuilder builder(n);
    std::vector<std::vector<double>> rhs(3, std::vector<double>(n, 0.0));

    for (int i = 0; i < n; ++i) {
        const int x = pixels[i] % w, y = pixels[i] / w;
        const int sx = x - region.offset_x, sy = y - region.offset_y;
        builder.add(i, i, 4.0);
        for (int k = 0; k < 4; ++k) {
            const int nx = x + kDx[k], ny = y + kDy[k];
            const int j = index[static_cast<std::size_t>(ny) * w + nx];
            for (int c = 0; c < 3; ++c) {
                const double gs =
                    source.real(sx, sy, c) -
                    source.real(nx - region.offset_x, ny - region.offset_y, c);
                double v = gs;
                if (mode == GuidanceMode::MixedGradients) {
                    const double gt = target.real(x, y, c) - target.real(nx, ny, c);
                    if (std::abs(gt) > std::abs(gs)) v = gt;
                }
                rhs[c][static_cast<std::size_t>(i)] += v;
                if (j < 0)
                    rhs[c][static_cast<std::size_t>(i)] += target.real(nx, ny, c);
            }
            if (j >= 0) builder.add(i, j, -1.0);
        }
    }

    SparseSystem system;
    system.matrix = builder.finalize(true);
    system.rhs = std::move(rhs);

    CgOptions options;
    options.tol = tol;
    options.max_iter = max_iter;
    const CgSolution solution = cg_solve(system, options);

    RgbImage out = target;
    for (int i = 0; i < n; ++i) {
        const int x = pixels[i] % w, y = pixels[i] / w;
        for (int c = 0; c < 3; ++c)
            out.at(x, y, c) = quantize8(solution.x[c][static_cast<std::size_t>(i)]);
    }
    return out;
}

RgbImage composite_over(const RgbImage& scene, const RgbImage& object,
                        const AlphaMap& alpha, int offset_x, int offset_y) {
    if (alpha.width() != object.width() || alpha.height() != object.height())
        throw DimensionMismatch("composite: alpha and object dimensions differ");
    if (offset_x < 0 || offset_y < 0 || offset_x + object.width() > scene.width() ||
        offset_y + object.height() > scene.height())
        throw OutOfBounds("composite: placed object exceeds the scene");

    RgbImage out = scene;
    for (int y = 0; y < object.height(); ++y) {
        for (int x = 0; x < object.width(); ++x) {
            const double a = alpha.at(x, y);
            for (int c = 0; c < 3; ++c) {
                const double v = a * object.real(x, y, c) +
                                 (1.0 - a) * scene.real(x + offset_x, y + offset_y, c);
                out.at(x + offset_x, y + offset_y, c) = quantize8(v);
            }
        }
    }
    return out;
}

} // namespace sceneforge
