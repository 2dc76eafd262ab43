#pragma once

#include <utility>
#include <vector>

#include "sceneforge/image.hpp"

namespace sceneforge {

enum class ElementShape { Disc, Square };

// Neighborhood swept over the mask. Disc membership: dx*dx + dy*dy <= r*r.
// Radius 0 is the identity element for both shapes.
struct StructuringElement {
    ElementShape shape = ElementShape::Square;
    int radius = 0;

    std::vector<std::pair<int, int>> offsets() const;
};

// Output true iff every in-bounds pixel under the element is true.
// Offsets falling outside the image are clipped, not treated as background.
BinaryMask erode(const BinaryMask& mask, const StructuringElement& se);

// Output true iff any in-bounds pixel under the reflected element is true.
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se);

// FG = erode(mask), BG = complement of dilate(mask), UNKNOWN = the rest.
// Throws EmptyMask when the mask has no true pixel. FG may come out empty;
// callers decide what to do about that.
Trimap make_trimap(const BinaryMask& mask, const StructuringElement& erode_se,
                   const StructuringElement& dilate_se);

} // namespace sceneforge
