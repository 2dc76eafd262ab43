#include "sceneforge/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sceneforge {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1)
        throw DimensionMismatch("image dimensions must be at least 1x1");
}

// Validates before the member initializer allocates, so bad dimensions throw
// DimensionMismatch instead of whatever std::vector does with a wrapped size.
std::size_t checked_size(int width, int height, std::size_t channels) {
    check_dims(width, height);
    return static_cast<std::size_t>(width) * height * channels;
}

} // namespace

std::uint8_t quantize8(double v) {
    v = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

RgbImage::RgbImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height), data_(checked_size(width, height, 3), fill) {}

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height * 3)
        throw DimensionMismatch("rgb data length does not match dimensions");
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height),
      data_(checked_size(width, height, 1), fill ? 1 : 0) {}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw DimensionMismatch("mask data length does not match dimensions");
    for (auto& v : data_) v = v ? 1 : 0;
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(
        std::count_if(data_.begin(), data_.end(), [](std::uint8_t v) { return v != 0; }));
}

BinaryMask complement(const BinaryMask& mask) {
    BinaryMask out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            out.set(x, y, !mask.at(x, y));
    return out;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionMismatch("mask_iou requires equal dimensions");
    std::size_t inter = 0, uni = 0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            const bool av = a.at(x, y), bv = b.at(x, y);
            inter += (av && bv) ? 1 : 0;
            uni += (av || bv) ? 1 : 0;
        }
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

AlphaMap::AlphaMap(int width, int height, double fill)
    : width_(width), height_(height), data_(checked_size(width, height, 1), fill) {}

AlphaMap::AlphaMap(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw DimensionMismatch("alpha data length does not match dimensions");
    for (double v : data_)
        if (!(v >= 0.0 && v <= 1.0))
            throw Error("alpha values must lie in [0,1]");
}

Trimap::Trimap(int width, int height, TrimapLabel fill)
    : width_(width), height_(height), data_(checked_size(width, height, 1), fill) {}

std::size_t Trimap::count(TrimapLabel label) const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), label));
}

namespace {

// Center-aligned source coordinate for destination index i.
inline double src_coord(int i, int dst_size, int src_size) {
    return (i + 0.5) * (static_cast<double>(src_size) / dst_size) - 0.5;
}

struct BilinearWeights {
    int lo;
    int hi;
    double frac;
};

inline BilinearWeights bilinear_axis(double coord, int size) {
    double fl = std::floor(coord);
    int lo = static_cast<int>(fl);
    double frac = coord - fl;
    int hi = lo + 1;
    lo = std::clamp(lo, 0, size - 1);
    hi = std::clamp(hi, 0, size - 1);
    return {lo, hi, frac};
}

} // namespace

RgbImage resize_bilinear(const RgbImage& src, int width, int height) {
    check_dims(src.width(), src.height());
    check_dims(width, height);
    RgbImage out(width, height);
    for (int y = 0; y < height; ++y) {
        const auto wy = bilinear_axis(src_coord(y, height, src.height()), src.height());
        for (int x = 0; x < width; ++x) {
            const auto wx = bilinear_axis(src_coord(x, width, src.width()), src.width());
            for (int c = 0; c < 3; ++c) {
                const double top = src.at(wx.lo, wy.lo, c) +
                                   wx.frac * (src.at(wx.hi, wy.lo, c) - src.at(wx.lo, wy.lo, c));
                const double bot = src.at(wx.lo, wy.hi, c) +
                                   wx.frac * (src.at(wx.hi, wy.hi, c) - src.at(wx.lo, wy.hi, c));
                out.at(x, y, c) = quantize8((top + wy.frac * (bot - top)) / 255.0);
            }
        }
    }
    return out;
}

AlphaMap resize_bilinear(const AlphaMap& src, int width, int height) {
    check_dims(src.width(), src.height());
    check_dims(width, height);
    AlphaMap out(width, height);
    for (int y = 0; y < height; ++y) {
        const auto wy = bilinear_axis(src_coord(y, height, src.height()), src.height());
        for (int x = 0; x < width; ++x) {
            const auto wx = bilinear_axis(src_coord(x, width, src.width()), src.width());
            const double top = src.at(wx.lo, wy.lo) +
                               wx.frac * (src.at(wx.hi, wy.lo) - src.at(wx.lo, wy.lo));
            const double bot = src.at(wx.lo, wy.hi) +
                               wx.frac * (src.at(wx.hi, wy.hi) - src.at(wx.lo, wy.hi));
            out.at(x, y) = std::clamp(top + wy.frac * (bot - top), 0.0, 1.0);
        }
    }
    return out;
}

} // namespace sceneforge
