#pragma once

#include <vector>

#include "sceneforge/image.hpp"
#include "sceneforge/sparse.hpp"

namespace sceneforge {

struct MattingParams {
    int window_radius = 1;  // 3x3 windows
    double epsilon = 1e-7;
    double tol = 1e-6;      // solver overrides
    int max_iter = 0;
};

// Laplacian reduced to the UNKNOWN pixels, FG/BG constraints folded into the
// right-hand side. unknown_pixels maps each unknown to its flat pixel index
// (scanline order).
struct MattingSystem {
    SparseSystem system;
    std::vector<int> unknown_pixels;
};

// The unreduced matting Laplacian over all pixels. Entry (i,j) accumulates,
// over each window w containing both pixels,
//   delta_ij - (1/|w|) * (1 + (I_i - mu)^T (Sigma + (eps/|w|) Id)^-1 (I_j - mu))
// with mu, Sigma the window color mean and covariance. Windows are the fully
// interior (2r+1)^2 blocks; a dimension shorter than 2r+1 degenerates to a
// single clipped span. Intended for small images and tests.
SparseMatrix matting_laplacian_full(const RgbImage& image, const MattingParams& params = {});

// Reduced system over UNKNOWN pixels. Throws NoUnknownPixels.
MattingSystem matting_laplacian(const RgbImage& image, const Trimap& trimap,
                                const MattingParams& params = {});

struct MattingStats {
    double overshoot = 0.0; // max distance outside [0,1] before clamping
    CgReport cg;
};

// Alpha = 1 on FG, 0 on BG, CG solution on UNKNOWN clamped to [0,1].
// An empty UNKNOWN set returns the FG indicator directly.
AlphaMap solve_alpha(const RgbImage& image, const Trimap& trimap,
                     const MattingParams& params = {}, MattingStats* stats = nullptr);

} // namespace sceneforge
