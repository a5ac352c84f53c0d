#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace regmine {

/// 8-bit grayscale page image, row-major, origin top-left.
class GrayRaster {
public:
    GrayRaster() = default;
    GrayRaster(int width, int height, std::uint8_t fill = 255);
    GrayRaster(int width, int height, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }

    std::span<const std::uint8_t> row(int y) const
    {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

    bool operator==(const GrayRaster&) const = default;

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Binary image. One byte per pixel holding 0 (black, background) or
/// 1 (white, foreground), row-major, origin top-left, x rightward and y
/// downward. PBM dumps pack the same rows MSB-first with 1 = foreground.
class BitRaster {
public:
    BitRaster() = default;
    BitRaster(int width, int height, std::uint8_t fill = 0);
    BitRaster(int width, int height, std::vector<std::uint8_t> bits);

    int width() const { return width_; }
    int height() const { return height_; }

    std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }

    /// Out-of-image reads return 0.
    std::uint8_t get(int x, int y) const
    {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0;
        return data_[index(x, y)];
    }

    std::span<const std::uint8_t> row(int y) const
    {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }
    std::span<std::uint8_t> row(int y)
    {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }

    const std::vector<std::uint8_t>& data() const { return data_; }

    std::size_t count_ones() const;

    bool operator==(const BitRaster&) const = default;

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Rectangular structuring element anchored at its center. Both sides odd.
class StructuringKernel {
public:
    StructuringKernel(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    int half_width() const { return width_ / 2; }
    int half_height() const { return height_ / 2; }

    bool operator==(const StructuringKernel&) const = default;

private:
    int width_;
    int height_;
};

struct MergeConfig {
    int threshold = 128;
    int close_iterations = 3;
    int open_iterations = 1;
    StructuringKernel kernel{3, 9};

    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const;
};

/// Pixel becomes foreground iff its intensity is strictly below `threshold`.
BitRaster threshold_invert(const GrayRaster& img, int threshold);

/// p stays 1 iff every pixel of the kernel translated to p is 1.
/// Pixels outside the image count as 0.
BitRaster erode(const BitRaster& img, const StructuringKernel& k);

/// Union of the kernel translated to every foreground pixel, clipped to the image.
BitRaster dilate(const BitRaster& img, const StructuringKernel& k);

/// Dilate then erode. Fills gaps narrower than the kernel.
BitRaster close(const BitRaster& img, const StructuringKernel& k);

/// Erode then dilate. Removes specks smaller than the kernel.
BitRaster open(const BitRaster& img, const StructuringKernel& k);

BitRaster complement(const BitRaster& img);

/// threshold_invert, then `close_iterations` closes, then `open_iterations` opens.
BitRaster merge_text_blobs(const GrayRaster& img, const MergeConfig& cfg);

} // namespace regmine
