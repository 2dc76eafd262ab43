#pragma once

// Deterministic fixture builders shared by the unit and acceptance suites.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "sceneforge/image.hpp"
#include "sceneforge/image_io.hpp"
#include "sceneforge/pool.hpp"
#include "sceneforge/rng.hpp"

namespace fixtures {

using namespace sceneforge;

// Unique scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        const unsigned n = counter.fetch_add(1);
        path_ = std::filesystem::temp_directory_path() /
                ("sceneforge-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(n));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline BinaryMask disc_mask(int w, int h, double cx, double cy, double r) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y, true);
    return m;
}

inline BinaryMask square_mask(int w, int h, int cx, int cy, int half) {
    BinaryMask m(w, h);
    for (int y = cy - half; y <= cy + half; ++y)
        for (int x = cx - half; x <= cx + half; ++x)
            if (m.in_bounds(x, y)) m.set(x, y, true);
    return m;
}

// Union of discs that all contain (cx, cy): star-shaped about that point.
inline BinaryMask blob_mask(int w, int h, double cx, double cy, std::uint64_t seed,
                            int discs = 4, double base_r = 10.0) {
    SplitMix64 rng(seed);
    BinaryMask m(w, h);
    for (int i = 0; i < discs; ++i) {
        const double off = rng.next_in(0.0, base_r * 0.8);
        const double ang = rng.next_in(0.0, 6.283185307179586);
        const double dx = off * std::cos(ang), dy = off * std::sin(ang);
        const double r = off + rng.next_in(base_r * 0.4, base_r);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if ((x - cx - dx) * (x - cx - dx) + (y - cy - dy) * (y - cy - dy) <= r * r)
                    m.set(x, y, true);
    }
    return m;
}

inline BinaryMask random_mask(int w, int h, double density, SplitMix64& rng) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (rng.next_double() < density) m.set(x, y, true);
    return m;
}

inline RgbImage random_image(int w, int h, SplitMix64& rng) {
    RgbImage img(w, h);
    for (auto& b : img.data()) b = static_cast<std::uint8_t>(rng.next_below(256));
    return img;
}

inline RgbImage constant_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RgbImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
        }
    return img;
}

// Left part one flat color, right part another.
inline RgbImage two_tone_image(int w, int h, int split_x,
                               std::uint8_t l0, std::uint8_t l1, std::uint8_t l2,
                               std::uint8_t r0, std::uint8_t r1, std::uint8_t r2) {
    RgbImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = x < split_x ? l0 : r0;
            img.at(x, y, 1) = x < split_x ? l1 : r1;
            img.at(x, y, 2) = x < split_x ? l2 : r2;
        }
    return img;
}

// Horizontal 8-bit ramp: channel c goes base + slope * x, clamped.
inline RgbImage ramp_image(int w, int h, int base, int slope) {
    RgbImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int v = std::clamp(base + slope * x, 0, 255);
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = static_cast<std::uint8_t>(v);
        }
    return img;
}

// Paints `color` on the mask over a flat background.
inline RgbImage paint_mask(const BinaryMask& mask,
                           std::uint8_t f0, std::uint8_t f1, std::uint8_t f2,
                           std::uint8_t b0, std::uint8_t b1, std::uint8_t b2) {
    RgbImage img(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            img.at(x, y, 0) = mask.at(x, y) ? f0 : b0;
            img.at(x, y, 1) = mask.at(x, y) ? f1 : b1;
            img.at(x, y, 2) = mask.at(x, y) ? f2 : b2;
        }
    return img;
}

// Smooth JPEG-friendly scene; `variant` shifts the gradient so distinct
// variants hash to distinct ids.
inline RgbImage gradient_scene(int w, int h, int variant) {
    RgbImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = static_cast<std::uint8_t>((x * 3 + variant * 17) % 256);
            img.at(x, y, 1) = static_cast<std::uint8_t>((y * 3 + variant * 41) % 256);
            img.at(x, y, 2) = static_cast<std::uint8_t>((x + y + variant * 71) % 256);
        }
    return img;
}

struct PoolSpec {
    int n_objects = 3;
    int n_scenes = 3;
    int object_size = 48;
    int scene_w = 64;
    int scene_h = 64;
};

// Builds a real pool on disk (ingestion included) and returns its manifest.
inline Manifest build_test_pool(const std::filesystem::path& dir, const PoolSpec& spec,
                                const IngestParams& params = {}) {
    namespace fs = std::filesystem;
    const fs::path staging = dir / "staging";
    fs::create_directories(staging);

    Manifest manifest;
    const int s = spec.object_size;
    for (int i = 0; i < spec.n_objects; ++i) {
        BinaryMask mask;
        switch (i % 3) {
        case 0: mask = disc_mask(s, s, s / 2.0, s / 2.0, s * 0.3); break;
        case 1: mask = square_mask(s, s, s / 2, s / 2, static_cast<int>(s * 0.28)); break;
        default: mask = blob_mask(s, s, s / 2.0, s / 2.0, 900 + i, 4, s * 0.22); break;
        }
        const auto fg = static_cast<std::uint8_t>(40 + 23 * i);
        const RgbImage img = paint_mask(mask, fg, static_cast<std::uint8_t>(255 - fg), 90,
                                        200, 200, static_cast<std::uint8_t>(180 + i));
        const fs::path img_path = staging / ("obj" + std::to_string(i) + ".png");
        const fs::path mask_path = staging / ("obj" + std::to_string(i) + "_mask.png");
        save_png(img, img_path);
        save_png(mask, mask_path);
        manifest.objects.push_back(
            ingest_object(dir, img_path, mask_path, "item " + std::to_string(i), params));
    }
    for (int i = 0; i < spec.n_scenes; ++i) {
        const fs::path scene_path = staging / ("scene" + std::to_string(i) + ".jpg");
        save_jpeg(gradient_scene(spec.scene_w, spec.scene_h, i), scene_path);
        manifest.scenes.push_back(ingest_scene(dir, scene_path, "scene " + std::to_string(i)));
    }
    save_manifest(manifest, dir / "manifest.json");
    return manifest;
}

} // namespace fixtures
