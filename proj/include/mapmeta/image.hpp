#pragma once

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "mapmeta/common.hpp"

namespace mapmeta {

// 8-bit RGB raster, used only to derive padding colors.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> pixels;  // row-major RGB

    const unsigned char* at(int x, int y) const {
        return &pixels[(static_cast<size_t>(y) * width + x) * 3];
    }
};

namespace detail {

inline RgbImage load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open image: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw parse_error(path + ": not a binary PPM (P6)");
    auto next_int = [&]() {
        // skip whitespace and '#' comments
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {}
            } else if (!std::isspace(c)) {
                in.unget();
                break;
            }
        }
        long long v;
        if (!(in >> v)) throw parse_error(path + ": bad PPM header");
        return v;
    };
    long long w = next_int(), h = next_int(), maxval = next_int();
    if (w <= 0 || h <= 0 || maxval != 255) throw parse_error(path + ": unsupported PPM header");
    in.get();  // single whitespace after maxval
    RgbImage img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.pixels.resize(static_cast<size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw parse_error(path + ": truncated PPM pixel data");
    return img;
}

inline RgbImage load_png(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!fp) throw config_error("cannot open image: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw parse_error(path + ": invalid PNG");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    RgbImage img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.pixels.resize(static_cast<size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.pixels.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace detail

inline RgbImage load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw config_error("cannot open image: " + path);
    char sig[2] = {0, 0};
    probe.read(sig, 2);
    probe.close();
    if (sig[0] == 'P' && sig[1] == '6') return detail::load_ppm(path);
    return detail::load_png(path);
}

struct RgbColor {
    double r = 128, g = 128, b = 128;
};

// Mean color over the image pixels inside [x0,x1) x [y0,y1), clipped to
// the image; an empty intersection yields mid gray.
inline RgbColor mean_color(const RgbImage& img, double x0, double y0, double x1, double y1) {
    int ix0 = std::max(0, static_cast<int>(std::floor(x0)));
    int iy0 = std::max(0, static_cast<int>(std::floor(y0)));
    int ix1 = std::min(img.width, static_cast<int>(std::ceil(x1)));
    int iy1 = std::min(img.height, static_cast<int>(std::ceil(y1)));
    if (ix0 >= ix1 || iy0 >= iy1) return {};
    double r = 0, g = 0, b = 0;
    long long n = 0;
    for (int y = iy0; y < iy1; ++y)
        for (int x = ix0; x < ix1; ++x) {
            const unsigned char* p = img.at(x, y);
            r += p[0];
            g += p[1];
            b += p[2];
            ++n;
        }
    return {r / n, g / n, b / n};
}

}  // namespace mapmeta
