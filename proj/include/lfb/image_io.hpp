/**
 * @file image_io.hpp
 * @brief PNG and PGM readers/writers mapping to [0,1] float maps.
 *
 * Reads 8-bit RGB PNG (3 channels), 8/16-bit grayscale PNG, and binary PGM.
 * 16-bit sources are rescaled by 1/65535. Targets that include this header
 * must link libpng.
 */
#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "lfb/errors.hpp"
#include "lfb/tensor.hpp"

namespace lfb {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FeatureMap read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot read image " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5") throw data_error(path.string() + ": only binary (P5) PGM is supported");
    auto next_int = [&]() {
        int v;
        // skip whitespace and '#' comment lines
        while (true) {
            int ch = in.peek();
            if (ch == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(ch)) {
                in.get();
            } else {
                break;
            }
        }
        if (!(in >> v)) throw data_error(path.string() + ": truncated PGM header");
        return v;
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    in.get();  // single whitespace after maxval
    if (w <= 0 || h <= 0 || (maxval != 255 && maxval != 65535)) {
        throw data_error(path.string() + ": unsupported PGM header");
    }
    FeatureMap out(h, w, 1);
    const size_t n = static_cast<size_t>(h) * w;
    if (maxval == 255) {
        std::vector<unsigned char> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (!in) throw data_error(path.string() + ": truncated PGM data");
        for (size_t i = 0; i < n; ++i) out.data[i] = buf[i] / 255.0f;
    } else {
        std::vector<unsigned char> buf(n * 2);  // big-endian 16-bit
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 2));
        if (!in) throw data_error(path.string() + ": truncated PGM data");
        for (size_t i = 0; i < n; ++i) {
            const unsigned v = (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1];
            out.data[i] = v / 65535.0f;
        }
    }
    return out;
}

}  // namespace detail

/// Reads a PNG or binary PGM into a float map in [0,1]. PNG may be 8-bit RGB
/// (3 channels) or 8/16-bit grayscale (1 channel).
inline FeatureMap read_image(const std::filesystem::path& path) {
    if (path.extension() == ".pgm") return detail::read_pgm(path);

    detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw data_error("cannot read image " + path.string());
    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8)) {
        throw data_error(path.string() + ": not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw data_error(path.string() + ": libpng init failed");
    }
    std::vector<png_bytep> rows;
    std::vector<png_byte> pixels;
    int width = 0, height = 0, channels = 0, bit_depth = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw data_error(path.string() + ": PNG decode error");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    bit_depth = png_get_bit_depth(png, info);
    channels = png_get_channels(png, info);
    if (!((channels == 1 && (bit_depth == 8 || bit_depth == 16)) ||
          (channels == 3 && bit_depth == 8))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw data_error(path.string() + ": unsupported PNG layout (need 8-bit RGB or 8/16-bit gray), got " +
                         std::to_string(channels) + " channels at " + std::to_string(bit_depth) +
                         " bits");
    }
    const size_t row_bytes = png_get_rowbytes(png, info);
    pixels.resize(row_bytes * static_cast<size_t>(height));
    rows.resize(static_cast<size_t>(height));
    for (int y = 0; y < height; ++y) rows[static_cast<size_t>(y)] = pixels.data() + row_bytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    FeatureMap out(height, width, channels);
    if (bit_depth == 8) {
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = pixels[i] / 255.0f;
    } else {  // 16-bit gray, big-endian in PNG byte order
        for (size_t i = 0; i < out.data.size(); ++i) {
            const unsigned v = (static_cast<unsigned>(pixels[2 * i]) << 8) | pixels[2 * i + 1];
            out.data[i] = v / 65535.0f;
        }
    }
    return out;
}

namespace detail {

inline void write_png(const std::filesystem::path& path, const FeatureMap& m, int bit_depth) {
    if (!(m.channels == 1 || m.channels == 3)) {
        throw data_error("write_png: need 1 or 3 channels, got " + m.shape_str());
    }
    if (m.channels == 3 && bit_depth != 8) throw data_error("write_png: RGB must be 8-bit");
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw data_error("cannot write image " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw data_error(path.string() + ": libpng init failed");
    }
    std::vector<png_byte> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw data_error(path.string() + ": PNG encode error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(m.width), static_cast<png_uint_32>(m.height),
                 bit_depth, m.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const size_t n = m.data.size();
    auto quant = [](float v, double top) {
        double q = static_cast<double>(v) * top + 0.5;
        if (q < 0.0) q = 0.0;
        if (q > top) q = top;
        return static_cast<unsigned>(q);
    };
    if (bit_depth == 8) {
        pixels.resize(n);
        for (size_t i = 0; i < n; ++i) pixels[i] = static_cast<png_byte>(quant(m.data[i], 255.0));
    } else {
        pixels.resize(n * 2);
        for (size_t i = 0; i < n; ++i) {
            const unsigned v = quant(m.data[i], 65535.0);
            pixels[2 * i] = static_cast<png_byte>(v >> 8);
            pixels[2 * i + 1] = static_cast<png_byte>(v & 0xFF);
        }
    }
    const size_t row_bytes = static_cast<size_t>(m.width) * m.channels * (bit_depth / 8);
    rows.resize(static_cast<size_t>(m.height));
    for (int y = 0; y < m.height; ++y) rows[static_cast<size_t>(y)] = pixels.data() + row_bytes * y;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

/// Writes a 3-channel map as 8-bit RGB PNG; values clamped from [0,1].
inline void write_png_rgb8(const std::filesystem::path& path, const FeatureMap& m) {
    detail::write_png(path, m, 8);
}

/// Writes a 1-channel map as 8-bit grayscale PNG; values clamped from [0,1].
inline void write_png_gray8(const std::filesystem::path& path, const FeatureMap& m) {
    detail::write_png(path, m, 8);
}

/// Writes a 1-channel map as 16-bit grayscale PNG; values clamped from [0,1].
inline void write_png_gray16(const std::filesystem::path& path, const FeatureMap& m) {
    detail::write_png(path, m, 16);
}

}  // namespace lfb
