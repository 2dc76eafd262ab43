#include "sceneforge/matting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "sceneforge/morphology.hpp"

namespace sceneforge {

namespace {

struct Range {
    int lo;
    int hi; // inclusive
};

// Window centers per dimension: fully interior when the dimension is wide
// enough, otherwise a single clipped window spanning the whole dimension.
Range window_centers(int size, int radius) {
    if (size >= 2 * radius + 1) return {radius, size - 1 - radius};
    return {(size - 1) / 2, (size - 1) / 2};
}

Range window_span(int center, int size, int radius) {
    if (size >= 2 * radius + 1) return {center - radius, center + radius};
    return {0, size - 1};
}

struct WindowStats {
    double mu[3];
    double chol[3][3]; // lower Cholesky factor of Sigma + (eps/|w|) Id
    int count;
};

// Window statistics accumulate in integers, so they do not depend on the
// traversal order of the window's pixels.
WindowStats compute_stats(const RgbImage& image, Range xs, Range ys, double epsilon) {
    std::int64_t s[3] = {0, 0, 0};
    std::int64_t sq[3][3] = {};
    int count = 0;
    for (int y = ys.lo; y <= ys.hi; ++y) {
        for (int x = xs.lo; x <= xs.hi; ++x) {
            const std::int64_t v[3] = {image.at(x, y, 0), image.at(x, y, 1),
                                       image.at(x, y, 2)};
            for (int a = 0; a < 3; ++a) {
                s[a] += v[a];
                for (int b = a; b < 3; ++b) sq[a][b] += v[a] * v[b];
            }
            ++count;
        }
    }

    WindowStats st;
    st.count = count;
    for (int a = 0; a < 3; ++a)
        st.mu[a] = static_cast<double>(s[a]) / (255.0 * count);

    double sigma[3][3];
    for (int a = 0; a < 3; ++a) {
        for (int b = a; b < 3; ++b) {
            sigma[a][b] = static_cast<double>(sq[a][b]) / (65025.0 * count) -
                          st.mu[a] * st.mu[b];
        }
        sigma[a][a] += epsilon / count;
    }

    // Cholesky factor instead of an explicit inverse: the regularized
    // covariance has eigenvalues down to eps/|w|, where cofactor inversion
    // cancels away most of the significant digits.
    const double a00 = sigma[0][0], a01 = sigma[0][1], a02 = sigma[0][2];
    const double a11 = sigma[1][1], a12 = sigma[1][2], a22 = sigma[2][2];
    const double l00 = std::sqrt(a00);
    const double l10 = a01 / l00;
    const double l20 = a02 / l00;
    const double l11 = std::sqrt(a11 - l10 * l10);
    const double l21 = (a12 - l20 * l10) / l11;
    const double l22 = std::sqrt(a22 - l20 * l20 - l21 * l21);
    st.chol[0][0] = l00;
    st.chol[1][0] = l10;
    st.chol[1][1] = l11;
    st.chol[2][0] = l20;
    st.chol[2][1] = l21;
    st.chol[2][2] = l22;
    st.chol[0][1] = st.chol[0][2] = st.chol[1][2] = 0.0;
    return st;
}

// delta_ij - (1/|w|)(1 + d_i^T M^-1 d_j) via the whitened vectors y = L^-1 d,
// so the quadratic form is a plain dot product, bit-identical under swapping
// i and j.
inline double pair_value(const WindowStats& st, const double* yi, const double* yj,
                         bool diagonal) {
    const double q = yi[0] * yj[0] + yi[1] * yj[1] + yi[2] * yj[2];
    return (diagonal ? 1.0 : 0.0) - (1.0 + q) / st.count;
}

struct WindowPixel {
    int flat;
    double d[3]; // L^-1 (color - mu)
};

void gather_window(const RgbImage& image, Range xs, Range ys, const WindowStats& st,
                   std::vector<WindowPixel>& pixels) {
    pixels.clear();
    for (int y = ys.lo; y <= ys.hi; ++y) {
        for (int x = xs.lo; x <= xs.hi; ++x) {
            WindowPixel p;
            p.flat = y * image.width() + x;
            double d[3];
            for (int c = 0; c < 3; ++c) d[c] = image.at(x, y, c) / 255.0 - st.mu[c];
            p.d[0] = d[0] / st.chol[0][0];
            p.d[1] = (d[1] - st.chol[1][0] * p.d[0]) / st.chol[1][1];
            p.d[2] = (d[2] - st.chol[2][0] * p.d[0] - st.chol[2][1] * p.d[1]) /
                     st.chol[2][2];
            pixels.push_back(p);
        }
    }
}

void validate_params(const MattingParams& params) {
    if (params.window_radius < 1)
        throw Error("matting: window_radius must be >= 1");
    if (!(params.epsilon > 0.0)) throw Error("matting: epsilon must be > 0");
}

} // namespace

SparseMatrix matting_laplacian_full(const RgbImage& image, const MattingParams& params) {
    validate_params(params);
    const int w = image.width(), h = image.height();
    const int r = params.window_radius;

    SparseBuilder builder(w * h);
    std::vector<WindowPixel> pixels;
    const Range cys = window_centers(h, r), cxs = window_centers(w, r);
    for (int cy = cys.lo; cy <= cys.hi; ++cy) {
        for (int cx = cxs.lo; cx <= cxs.hi; ++cx) {
            const Range ys = window_span(cy, h, r), xs = window_span(cx, w, r);
            const WindowStats st = compute_stats(image, xs, ys, params.epsilon);
            gather_window(image, xs, ys, st, pixels);
            for (std::size_t a = 0; a < pixels.size(); ++a) {
                for (std::size_t b = a; b < pixels.size(); ++b) {
                    const double val = pair_value(st, pixels[a].d, pixels[b].d, a == b);
                    builder.add(pixels[a].flat, pixels[b].flat, val);
                    if (b != a) builder.add(pixels[b].flat, pixels[a].flat, val);
                }
            }
        }
    }
    return builder.finalize(true);
}

MattingSystem matting_laplacian(const RgbImage& image, const Trimap& trimap,
                                const MattingParams& params) {
    validate_params(params);
    if (image.width() != trimap.width() || image.height() != trimap.height())
        throw DimensionMismatch("matting: image and trimap dimensions differ");

    const int w = image.width(), h = image.height();
    const int r = params.window_radius;

    std::vector<int> unknown_of_pixel(static_cast<std::size_t>(w) * h, -1);
    std::vector<int> unknown_pixels;
    BinaryMask unknown_mask(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (trimap.at(x, y) != TrimapLabel::Unknown) continue;
            unknown_of_pixel[static_cast<std::size_t>(y) * w + x] =
                static_cast<int>(unknown_pixels.size());
            unknown_pixels.push_back(y * w + x);
            unknown_mask.set(x, y, true);
        }
    }
    if (unknown_pixels.empty())
        throw NoUnknownPixels("matting: trimap has no unknown pixels");

    // Skip windows that cannot touch an unknown pixel. The dilation filter is
    // only valid when window extents equal the radius in both dimensions.
    const bool filter_ok = w >= 2 * r + 1 && h >= 2 * r + 1;
    BinaryMask candidate;
    if (filter_ok)
        candidate = dilate(unknown_mask, StructuringElement{ElementShape::Square, r});

    const int n_unknown = static_cast<int>(unknown_pixels.size());
    SparseBuilder builder(n_unknown);
    std::vector<double> rhs(static_cast<std::size_t>(n_unknown), 0.0);

    std::vector<WindowPixel> pixels;
    const Range cys = window_centers(h, r), cxs = window_centers(w, r);
    for (int cy = cys.lo; cy <= cys.hi; ++cy) {
        for (int cx = cxs.lo; cx <= cxs.hi; ++cx) {
            if (filter_ok && !candidate.at(cx, cy)) continue;
            const Range ys = window_span(cy, h, r), xs = window_span(cx, w, r);
            const WindowStats st = compute_stats(image, xs, ys, params.epsilon);
            gather_window(image, xs, ys, st, pixels);

            bool any_unknown = false;
            for (const auto& p : pixels)
                if (unknown_of_pixel[static_cast<std::size_t>(p.flat)] >= 0) {
                    any_unknown = true;
                    break;
                }
            if (!any_unknown) continue;

            for (std::size_t a = 0; a < pixels.size(); ++a) {
                const int ua = unknown_of_pixel[static_cast<std::size_t>(pixels[a].flat)];
                for (std::size_t b = a; b < pixels.size(); ++b) {
                    const int ub =
                        unknown_of_pixel[static_cast<std::size_t>(pixels[b].flat)];
                    if (ua < 0 && ub < 0) continue;
                    const double val = pair_value(st, pixels[a].d, pixels[b].d, a == b);
                    if (ua >= 0 && ub >= 0) {
                        builder.add(ua, ub, val);
                        if (b != a) builder.add(ub, ua, val);
                    } else if (ua >= 0) {
                        // constrained neighbor: alpha = 1 on FG moves to rhs
                        if (trimap.data()[static_cast<std::size_t>(pixels[b].flat)] ==
                            TrimapLabel::Foreground)
                            rhs[static_cast<std::size_t>(ua)] -= val;
                    } else {
                        if (trimap.data()[static_cast<std::size_t>(pixels[a].flat)] ==
                            TrimapLabel::Foreground)
                            rhs[static_cast<std::size_t>(ub)] -= val;
                    }
                }
            }
        }
    }

    MattingSystem system;
    system.system.matrix = builder.finalize(true);
    system.system.rhs.push_back(std::move(rhs));
    system.unknown_pixels = std::move(unknown_pixels);
    return system;
}

AlphaMap solve_alpha(const RgbImage& image, const Trimap& trimap,
                     const MattingParams& params, MattingStats* stats) {
    validate_params(params);
    if (image.width() != trimap.width() || image.height() != trimap.height())
        throw DimensionMismatch("matting: image and trimap dimensions differ");

    AlphaMap alpha(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            alpha.at(x, y) = trimap.at(x, y) == TrimapLabel::Foreground ? 1.0 : 0.0;

    if (trimap.count(TrimapLabel::Unknown) == 0) {
        if (stats) *stats = {};
        return alpha; // nothing to solve; alpha is the FG indicator
    }

    const MattingSystem sys = matting_laplacian(image, trimap, params);
    CgOptions options;
    options.tol = params.tol;
    options.max_iter = params.max_iter;
    const CgSolution solution = cg_solve(sys.system, options);

    double overshoot = 0.0;
    const int w = image.width();
    for (std::size_t u = 0; u < sys.unknown_pixels.size(); ++u) {
        const double v = solution.x[0][u];
        overshoot = std::max({overshoot, -v, v - 1.0});
        const int flat = sys.unknown_pixels[u];
        alpha.at(flat % w, flat / w) = std::clamp(v, 0.0, 1.0);
    }
    overshoot = std::max(overshoot, 0.0);

    if (stats) {
        stats->overshoot = overshoot;
        stats->cg = solution.reports[0];
    }
    return alpha;
}

} // namespace sceneforge
