#pragma once

#include <cstdint>
#include <vector>

#include "sceneforge/error.hpp"

// Shared coordinate convention: x = column (rightward), y = row (downward),
// pixel (x, y) has its center at real coordinates (x, y).

namespace sceneforge {

// Rounds to 8 bits after clamping to [0, 1]; half rounds away from zero.
std::uint8_t quantize8(double v);

// 8-bit sRGB triplets, row-major, interleaved. Math consumers read channels
// as v/255 with no gamma linearization.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, std::uint8_t fill = 0);
    RgbImage(int width, int height, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }

    std::uint8_t at(int x, int y, int c) const {
        return data_[static_cast<std::size_t>(y * width_ + x) * 3 + c];
    }
    std::uint8_t& at(int x, int y, int c) {
        return data_[static_cast<std::size_t>(y * width_ + x) * 3 + c];
    }
    double real(int x, int y, int c) const { return at(x, y, c) / 255.0; }

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

    bool operator==(const RgbImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Per-pixel boolean, stored as 0/1 bytes.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);
    BinaryMask(int width, int height, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }

    bool at(int x, int y) const {
        return data_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set(int x, int y, bool v) {
        data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    std::size_t count() const;
    bool any() const { return count() > 0; }

    const std::vector<std::uint8_t>& data() const { return data_; }

    bool operator==(const BinaryMask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

BinaryMask complement(const BinaryMask& mask);

// Intersection-over-union of two same-sized masks. Both empty -> 1.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Per-pixel opacity in [0, 1].
class AlphaMap {
public:
    AlphaMap() = default;
    AlphaMap(int width, int height, double fill = 0.0);
    AlphaMap(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }

    double at(int x, int y) const {
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }
    double& at(int x, int y) {
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const AlphaMap&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

enum class TrimapLabel : std::uint8_t { Background = 0, Unknown = 1, Foreground = 2 };

class Trimap {
public:
    Trimap() = default;
    Trimap(int width, int height, TrimapLabel fill = TrimapLabel::Background);

    int width() const { return width_; }
    int height() const { return height_; }

    TrimapLabel at(int x, int y) const {
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }
    void set(int x, int y, TrimapLabel v) {
        data_[static_cast<std::size_t>(y) * width_ + x] = v;
    }

    std::size_t count(TrimapLabel label) const;

    const std::vector<TrimapLabel>& data() const { return data_; }

    bool operator==(const Trimap&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<TrimapLabel> data_;
};

// Bilinear resampling with center-aligned coordinates and edge clamping.
RgbImage resize_bilinear(const RgbImage& src, int width, int height);
AlphaMap resize_bilinear(const AlphaMap& src, int width, int height);

} // namespace sceneforge
