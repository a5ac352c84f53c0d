#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "regmine/raster.hpp"

namespace regmine {

/// Interleaved 8-bit RGB image, used only for debug overlays.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // width * height * 3

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}
    explicit RgbImage(const GrayRaster& gray);

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

GrayRaster read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayRaster& img);

/// Binary PBM (P4); rows padded to a byte, MSB first, bit 1 = foreground.
void write_pbm(const std::filesystem::path& path, const BitRaster& img);
std::vector<std::uint8_t> encode_pbm(const BitRaster& img);

/// Reads gray, gray+alpha, RGB or RGBA PNGs (8 or 16 bit) and converts to gray.
GrayRaster read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& img);

/// Dispatches on the file signature: P5 PGM or PNG.
GrayRaster read_image(const std::filesystem::path& path);

bool is_page_image(const std::filesystem::path& path);

} // namespace regmine
