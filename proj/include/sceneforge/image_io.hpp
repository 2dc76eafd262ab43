#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sceneforge/image.hpp"

namespace sceneforge {

struct ImageDims {
    int width = 0;
    int height = 0;
};

// PNG or JPEG, sniffed from the file contents rather than the extension.
RgbImage load_rgb(const std::filesystem::path& path);

// Single-channel PNG; values >= 128 count as foreground.
BinaryMask load_mask(const std::filesystem::path& path);

// Single-channel PNG, 8- or 16-bit; values scaled to [0,1].
AlphaMap load_alpha(const std::filesystem::path& path);

// Single-channel PNG with BG=0, UNKNOWN=128, FG=255.
Trimap load_trimap(const std::filesystem::path& path);

// All writers go through a temp file + rename, and encode with fixed
// settings so identical inputs give identical bytes.
void save_png(const RgbImage& image, const std::filesystem::path& path);
void save_png(const BinaryMask& mask, const std::filesystem::path& path);   // 0/255
void save_png(const AlphaMap& alpha, const std::filesystem::path& path,
              int bit_depth = 16);
void save_png(const Trimap& trimap, const std::filesystem::path& path);     // 0/128/255

void save_jpeg(const RgbImage& image, const std::filesystem::path& path,
               int quality = 95);

// Reads only the PNG IHDR / JPEG SOF header.
ImageDims probe_dimensions(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       const void* data, std::size_t size);

} // namespace sceneforge
