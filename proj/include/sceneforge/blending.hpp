#pragma once

#include "sceneforge/image.hpp"

namespace sceneforge {

enum class GuidanceMode { SourceGradients, MixedGradients };

// Pixels of the target to be solved, plus the integer translation taking
// source coordinates into target coordinates. The region must keep at least
// one pixel of margin from the target border.
struct BlendRegion {
    BinaryMask mask;
    int offset_x = 0;
    int offset_y = 0;
};

// Seamless cloning: per channel solves the discrete Poisson equation over the
// region with Dirichlet boundary taken from the target. Guidance is the
// source gradient field, or in mixed mode the larger-magnitude of source and
// target gradients per pixel pair (ties go to source). Pixels outside the
// region are returned unchanged; solved values are clamped to [0,1] before
// 8-bit quantization.
// Throws RegionTouchesBorder, OutOfBounds (source does not cover the region)
// and propagates solver errors.
RgbImage poisson_blend(const RgbImage& target, const RgbImage& source,
                       const BlendRegion& region, GuidanceMode mode,
                       double tol = 1e-6, int max_iter = 0);

// out = alpha * object + (1 - alpha) * scene over the placed rectangle.
// Throws OutOfBounds when the placed object exceeds the scene, and
// DimensionMismatch when alpha and object disagree.
RgbImage composite_over(const RgbImage& scene, const RgbImage& object,
                        const AlphaMap& alpha, int offset_x, int offset_y);

} // namespace sceneforge
