#include "sceneforge/morphology.hpp"

namespace sceneforge {

std::vector<std::pair<int, int>> StructuringElement::offsets() const {
    std::vector<std::pair<int, int>> out;
    const int r = radius;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            if (shape == ElementShape::Disc && dx * dx + dy * dy > r * r) continue;
            out.emplace_back(dx, dy);
        }
    }
    return out;
}

namespace {

enum class Mode { Erode, Dilate };

BinaryMask sweep(const BinaryMask& mask, const StructuringElement& se, Mode mode) {
    if (mask.width() < 1 || mask.height() < 1)
        throw DimensionMismatch("morphology needs a nonempty mask");
    if (se.radius < 0) throw Error("structuring element radius must be >= 0");
    if (se.radius == 0) return mask;

    const auto offsets = se.offsets();
    BinaryMask out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            bool value = (mode == Mode::Erode);
            for (const auto& [dx, dy] : offsets) {
                const int nx = x + dx, ny = y + dy;
                if (!mask.in_bounds(nx, ny)) continue; // clipped at borders
                const bool v = mask.at(nx, ny);
                if (mode == Mode::Erode) {
                    if (!v) { value = false; break; }
                } else {
                    if (v) { value = true; break; }
                }
            }
            out.set(x, y, value);
        }
    }
    return out;
}

} // namespace

BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
    return sweep(mask, se, Mode::Erode);
}

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
    // disc and square elements are symmetric, so the reflection is themselves
    return sweep(mask, se, Mode::Dilate);
}

Trimap make_trimap(const BinaryMask& mask, const StructuringElement& erode_se,
                   const StructuringElement& dilate_se) {
    if (!mask.any()) throw EmptyMask("make_trimap: mask has no foreground pixel");

    const BinaryMask fg = erode(mask, erode_se);
    const BinaryMask reach = dilate(mask, dilate_se);

    Trimap out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (fg.at(x, y))
                out.set(x, y, TrimapLabel::Foreground);
            else if (reach.at(x, y))
                out.set(x, y, TrimapLabel::Unknown);
            else
                out.set(x, y, TrimapLabel::Background);
        }
    }
    return out;
}

} // namespace sceneforge
