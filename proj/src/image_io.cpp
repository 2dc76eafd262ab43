#include "sceneforge/image_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include <jpeglib.h>
#include <png.h>

namespace sceneforge {

namespace fs = std::filesystem;

namespace {

bool is_png(const std::vector<std::uint8_t>& bytes) {
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

bool is_jpeg(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 &&
           bytes[2] == 0xFF;
}

struct PngReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t len) {
    auto* st = static_cast<PngReader*>(png_get_io_ptr(png));
    if (st->pos + len > st->size) png_error(png, "unexpected end of file");
    std::memcpy(out, st->data + st->pos, len);
    st->pos += len;
}

void png_mem_write(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_mem_flush(png_structp) {}

void check_dims(png_uint_32 w, png_uint_32 h, png_structp png) {
    if (w == 0 || h == 0 || w > 65535 || h > 65535)
        png_error(png, "unsupported dimensions");
}

RgbImage decode_png_rgb(const std::vector<std::uint8_t>& bytes,
                        const std::string& what) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             nullptr, nullptr);
    if (!png) throw DecodeError(what + ": png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DecodeError(what + ": png init failed");
    }

    PngReader reader{bytes.data(), bytes.size(), 0};
    std::vector<std::uint8_t> raster;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError(what + ": corrupt PNG");
    }

    png_set_read_fn(png, &reader, png_mem_read);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    check_dims(w, h, png);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_16(png);
    png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3)
        png_error(png, "unexpected row layout");

    raster.resize(static_cast<std::size_t>(w) * h * 3);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = raster.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    return RgbImage(static_cast<int>(w), static_cast<int>(h), std::move(raster));
}

struct GrayData {
    int width = 0;
    int height = 0;
    int bit_depth = 0;                 // 8 or 16 after expansion
    std::vector<std::uint16_t> pixels; // raw code values
};

GrayData decode_png_gray(const std::vector<std::uint8_t>& bytes,
                         const std::string& what, bool keep_16) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             nullptr, nullptr);
    if (!png) throw DecodeError(what + ": png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DecodeError(what + ": png init failed");
    }

    PngReader reader{bytes.data(), bytes.size(), 0};
    std::vector<std::uint8_t> raster;
    std::vector<png_bytep> rows;
    GrayData out;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError(what + ": corrupt PNG");
    }

    png_set_read_fn(png, &reader, png_mem_read);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    check_dims(w, h, png);
    const int color_type = png_get_color_type(png, info);
    if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_GRAY_ALPHA)
        png_error(png, "expected grayscale");

    png_set_expand_gray_1_2_4_to_8(png);
    if (!keep_16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const int depth = png_get_bit_depth(png, info);
    const std::size_t stride = static_cast<std::size_t>(w) * (depth / 8);
    if (png_get_rowbytes(png, info) != stride)
        png_error(png, "unexpected row layout");

    raster.resize(stride * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = raster.data() + static_cast<std::size_t>(y) * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.bit_depth = depth;
    out.pixels.resize(static_cast<std::size_t>(w) * h);
    if (depth == 16) {
        for (std::size_t i = 0; i < out.pixels.size(); ++i)
            out.pixels[i] = static_cast<std::uint16_t>((raster[2 * i] << 8) |
                                                       raster[2 * i + 1]);
    } else {
        for (std::size_t i = 0; i < out.pixels.size(); ++i)
            out.pixels[i] = raster[i];
    }
    return out;
}

std::vector<std::uint8_t> encode_png(int width, int height, int bit_depth,
                                     int color_type,
                                     const std::vector<std::uint8_t>& raster) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              nullptr, nullptr);
    if (!png) throw IoError("png encoder init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png encoder init failed");
    }

    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows;
    const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    const std::size_t stride =
        static_cast<std::size_t>(width) * channels * (bit_depth / 8);

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png encode failed");
    }

    png_set_write_fn(png, &out, png_mem_write, png_mem_flush);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    // fixed encoder settings keep output bytes reproducible
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_write_info(png, info);

    rows.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(raster.data() + static_cast<std::size_t>(y) * stride);
    png_write_image(png, rows.data());
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
    return out;
}

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jb;
    char msg[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->msg);
    std::longjmp(err->jb, 1);
}

RgbImage decode_jpeg_rgb(const std::vector<std::uint8_t>& bytes,
                         const std::string& what) {
    jpeg_decompress_struct cinfo;
    JpegError jerr;
    cinfo.err = jpeg_std_error(&jerr.mgr);
    jerr.mgr.error_exit = jpeg_error_exit;

    std::vector<std::uint8_t> raster;

    if (setjmp(jerr.jb)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError(what + ": " + jerr.msg);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    if (w == 0 || h == 0 || cinfo.output_components != 3) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError(what + ": unsupported JPEG layout");
    }

    raster.resize(static_cast<std::size_t>(w) * h * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = raster.data() + static_cast<std::size_t>(cinfo.output_scanline) *
                                           static_cast<std::size_t>(w) * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    return RgbImage(w, h, std::move(raster));
}

std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality) {
    jpeg_compress_struct cinfo;
    JpegError jerr;
    cinfo.err = jpeg_std_error(&jerr.mgr);
    jerr.mgr.error_exit = jpeg_error_exit;

    unsigned char* buffer = nullptr;
    unsigned long size = 0;

    if (setjmp(jerr.jb)) {
        jpeg_destroy_compress(&cinfo);
        if (buffer) std::free(buffer);
        throw IoError(std::string("jpeg encode failed: ") + jerr.msg);
    }

    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = static_cast<JDIMENSION>(image.width());
    cinfo.image_height = static_cast<JDIMENSION>(image.height());
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(
            image.data().data() + static_cast<std::size_t>(cinfo.next_scanline) *
                                      static_cast<std::size_t>(image.width()) * 3);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);

    std::vector<std::uint8_t> out(buffer, buffer + size);
    std::free(buffer);
    return out;
}

std::uint32_t be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) |
           (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

ImageDims probe_png(const std::vector<std::uint8_t>& bytes,
                    const std::string& what) {
    // signature (8) + IHDR length/type (8) + width/height
    if (bytes.size() < 24 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0)
        throw DecodeError(what + ": corrupt PNG header");
    return {static_cast<int>(be32(bytes.data() + 16)),
            static_cast<int>(be32(bytes.data() + 20))};
}

ImageDims probe_jpeg(const std::vector<std::uint8_t>& bytes,
                     const std::string& what) {
    std::size_t pos = 2;
    while (pos + 4 <= bytes.size()) {
        if (bytes[pos] != 0xFF) throw DecodeError(what + ": corrupt JPEG marker");
        std::uint8_t marker = bytes[pos + 1];
        while (marker == 0xFF && pos + 2 < bytes.size()) {
            ++pos;
            marker = bytes[pos + 1];
        }
        pos += 2;
        if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7)) continue;
        if (marker == 0xD9) break;
        if (pos + 2 > bytes.size()) break;
        const std::size_t length = (bytes[pos] << 8) | bytes[pos + 1];
        if (length < 2 || pos + length > bytes.size()) break;
        const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 &&
                         marker != 0xC8 && marker != 0xCC;
        if (sof) {
            if (length < 7) break;
            const int h = (bytes[pos + 3] << 8) | bytes[pos + 4];
            const int w = (bytes[pos + 5] << 8) | bytes[pos + 6];
            return {w, h};
        }
        pos += length;
    }
    throw DecodeError(what + ": no JPEG frame header found");
}

} // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

void write_file_atomic(const fs::path& path, const void* data, std::size_t size) {
    static std::atomic<std::uint64_t> counter{0};
    const std::uint64_t tag = counter.fetch_add(1);
    fs::path tmp = path;
    tmp += ".tmp-" + std::to_string(tag);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        out.flush();
        if (!out.good()) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("rename failed for " + path.string());
    }
}

RgbImage load_rgb(const fs::path& path) {
    const auto bytes = read_file(path);
    if (is_png(bytes)) return decode_png_rgb(bytes, path.string());
    if (is_jpeg(bytes)) return decode_jpeg_rgb(bytes, path.string());
    throw DecodeError(path.string() + ": unrecognized image format");
}

BinaryMask load_mask(const fs::path& path) {
    const auto bytes = read_file(path);
    if (!is_png(bytes)) throw DecodeError(path.string() + ": expected PNG mask");
    const GrayData gray = decode_png_gray(bytes, path.string(), false);
    std::vector<std::uint8_t> data(gray.pixels.size());
    for (std::size_t i = 0; i < gray.pixels.size(); ++i)
        data[i] = gray.pixels[i] >= 128 ? 1 : 0;
    return BinaryMask(gray.width, gray.height, std::move(data));
}

AlphaMap load_alpha(const fs::path& path) {
    const auto bytes = read_file(path);
    if (!is_png(bytes)) throw DecodeError(path.string() + ": expected PNG alpha");
    const GrayData gray = decode_png_gray(bytes, path.string(), true);
    const double scale = gray.bit_depth == 16 ? 65535.0 : 255.0;
    AlphaMap alpha(gray.width, gray.height);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i)
        alpha.data()[i] = gray.pixels[i] / scale;
    return alpha;
}

Trimap load_trimap(const fs::path& path) {
    const auto bytes = read_file(path);
    if (!is_png(bytes)) throw DecodeError(path.string() + ": expected PNG trimap");
    const GrayData gray = decode_png_gray(bytes, path.string(), false);
    Trimap trimap(gray.width, gray.height);
    for (int y = 0; y < gray.height; ++y) {
        for (int x = 0; x < gray.width; ++x) {
            const std::uint16_t v =
                gray.pixels[static_cast<std::size_t>(y) * gray.width + x];
            TrimapLabel label;
            if (v == 0)
                label = TrimapLabel::Background;
            else if (v == 128)
                label = TrimapLabel::Unknown;
            else if (v == 255)
                label = TrimapLabel::Foreground;
            else
                throw DecodeError(path.string() + ": trimap value " +
                                  std::to_string(v) + " is not 0/128/255");
            trimap.set(x, y, label);
        }
    }
    return trimap;
}

void save_png(const RgbImage& image, const fs::path& path) {
    const auto bytes = encode_png(image.width(), image.height(), 8,
                                  PNG_COLOR_TYPE_RGB, image.data());
    write_file_atomic(path, bytes.data(), bytes.size());
}

void save_png(const BinaryMask& mask, const fs::path& path) {
    std::vector<std::uint8_t> raster(mask.data().size());
    for (std::size_t i = 0; i < raster.size(); ++i)
        raster[i] = mask.data()[i] ? 255 : 0;
    const auto bytes =
        encode_png(mask.width(), mask.height(), 8, PNG_COLOR_TYPE_GRAY, raster);
    write_file_atomic(path, bytes.data(), bytes.size());
}

void save_png(const AlphaMap& alpha, const fs::path& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw Error("alpha PNG bit depth must be 8 or 16");
    std::vector<std::uint8_t> raster;
    if (bit_depth == 8) {
        raster.resize(alpha.data().size());
        for (std::size_t i = 0; i < raster.size(); ++i)
            raster[i] = quantize8(alpha.data()[i]);
    } else {
        raster.resize(alpha.data().size() * 2);
        for (std::size_t i = 0; i < alpha.data().size(); ++i) {
            const double v = std::clamp(alpha.data()[i], 0.0, 1.0);
            const auto code = static_cast<std::uint16_t>(std::lround(v * 65535.0));
            raster[2 * i] = static_cast<std::uint8_t>(code >> 8);
            raster[2 * i + 1] = static_cast<std::uint8_t>(code & 0xFF);
        }
    }
    const auto bytes = encode_png(alpha.width(), alpha.height(), bit_depth,
                                  PNG_COLOR_TYPE_GRAY, raster);
    write_file_atomic(path, bytes.data(), bytes.size());
}

void save_png(const Trimap& trimap, const fs::path& path) {
    std::vector<std::uint8_t> raster(trimap.data().size());
    for (std::size_t i = 0; i < raster.size(); ++i) {
        switch (trimap.data()[i]) {
        case TrimapLabel::Background: raster[i] = 0; break;
        case TrimapLabel::Unknown: raster[i] = 128; break;
        case TrimapLabel::Foreground: raster[i] = 255; break;
        }
    }
    const auto bytes =
        encode_png(trimap.width(), trimap.height(), 8, PNG_COLOR_TYPE_GRAY, raster);
    write_file_atomic(path, bytes.data(), bytes.size());
}

void save_jpeg(const RgbImage& image, const fs::path& path, int quality) {
    const auto bytes = encode_jpeg(image, quality);
    write_file_atomic(path, bytes.data(), bytes.size());
}

ImageDims probe_dimensions(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> head(4096);
    in.read(reinterpret_cast<char*>(head.data()),
            static_cast<std::streamsize>(head.size()));
    head.resize(static_cast<std::size_t>(in.gcount()));
    if (is_png(head)) return probe_png(head, path.string());
    if (is_jpeg(head)) {
        // SOF can sit past the first 4 KiB when EXIF blocks lead the file
        if (in.good()) {
            std::vector<std::uint8_t> rest((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
            head.insert(head.end(), rest.begin(), rest.end());
        }
        return probe_jpeg(head, path.string());
    }
    throw DecodeError(path.string() + ": unrecognized image format");
}

} // namespace sceneforge
