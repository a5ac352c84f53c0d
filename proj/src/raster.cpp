#include "regmine/raster.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace regmine {

namespace {

void check_dims(int width, int height)
{
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("raster dimensions must be positive, got " + std::to_string(width) +
                                    "x" + std::to_string(height));
    }
}

enum class Op { Erode, Dilate };

// Rectangular kernels are separable: eroding (dilating) by a w x h box equals
// eroding by a 1 x h column after a w x 1 row. Both passes treat pixels
// outside the image as 0, which keeps the decomposition exact at the borders.
void horizontal_pass(const BitRaster& in, BitRaster& out, int half, Op op)
{
    const int w = in.width();
    const int h = in.height();
    const int span = 2 * half + 1;
#pragma omp parallel
    {
        std::vector<int> prefix(static_cast<std::size_t>(w) + 1);
#pragma omp for schedule(static)
        for (int y = 0; y < h; ++y) {
            auto src = in.row(y);
            prefix[0] = 0;
            for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + src[x];
            auto dst = out.row(y);
            for (int x = 0; x < w; ++x) {
                const int lo = x - half;
                const int hi = x + half + 1;
                const int count = prefix[std::min(hi, w)] - prefix[std::max(lo, 0)];
                if (op == Op::Erode) {
                    dst[x] = (lo >= 0 && hi <= w && count == span) ? 1 : 0;
                } else {
                    dst[x] = count > 0 ? 1 : 0;
                }
            }
        }
    }
}

void vertical_pass(const BitRaster& in, BitRaster& out, int half, Op op)
{
    const int w = in.width();
    const int h = in.height();
    const int span = 2 * half + 1;
    constexpr int strip = 256;
    const int strips = (w + strip - 1) / strip;
#pragma omp parallel
    {
        std::vector<int> counts(strip);
#pragma omp for schedule(static)
        for (int s = 0; s < strips; ++s) {
            const int c0 = s * strip;
            const int c1 = std::min(w, c0 + strip);
            const int n = c1 - c0;
            std::fill(counts.begin(), counts.begin() + n, 0);
            for (int y = 0; y <= std::min(half, h - 1); ++y) {
                auto src = in.row(y);
                for (int i = 0; i < n; ++i) counts[i] += src[c0 + i];
            }
            for (int y = 0; y < h; ++y) {
                const bool full = (y - half >= 0) && (y + half < h);
                auto dst = out.row(y);
                for (int i = 0; i < n; ++i) {
                    if (op == Op::Erode) {
                        dst[c0 + i] = (full && counts[i] == span) ? 1 : 0;
                    } else {
                        dst[c0 + i] = counts[i] > 0 ? 1 : 0;
                    }
                }
                if (y + half + 1 < h) {
                    auto add = in.row(y + half + 1);
                    for (int i = 0; i < n; ++i) counts[i] += add[c0 + i];
                }
                if (y - half >= 0) {
                    auto sub = in.row(y - half);
                    for (int i = 0; i < n; ++i) counts[i] -= sub[c0 + i];
                }
            }
        }
    }
}

BitRaster morph(const BitRaster& img, const StructuringKernel& k, Op op)
{
    BitRaster tmp(img.width(), img.height());
    BitRaster out(img.width(), img.height());
    horizontal_pass(img, tmp, k.half_width(), op);
    vertical_pass(tmp, out, k.half_height(), op);
    return out;
}

} // namespace

GrayRaster::GrayRaster(int width, int height, std::uint8_t fill)
    : width_(width), height_(height)
{
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayRaster::GrayRaster(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data))
{
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("gray raster data length does not match dimensions");
    }
}

BitRaster::BitRaster(int width, int height, std::uint8_t fill)
    : width_(width), height_(height)
{
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

BitRaster::BitRaster(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), data_(std::move(bits))
{
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("bit raster data length does not match dimensions");
    }
    for (auto& b : data_) b = b ? 1 : 0;
}

std::size_t BitRaster::count_ones() const
{
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

StructuringKernel::StructuringKernel(int width, int height)
    : width_(width), height_(height)
{
    if (width < 1 || height < 1 || width % 2 == 0 || height % 2 == 0) {
        throw std::invalid_argument("kernel sides must be odd and >= 1, got " + std::to_string(width) +
                                    "x" + std::to_string(height));
    }
}

void MergeConfig::validate() const
{
    if (threshold < 0 || threshold > 255) throw std::invalid_argument("threshold must be in [0,255]");
    if (close_iterations < 0 || open_iterations < 0) {
        throw std::invalid_argument("iteration counts must be >= 0");
    }
    if (open_iterations > close_iterations) {
        throw std::invalid_argument("open_iterations must not exceed close_iterations");
    }
}

BitRaster threshold_invert(const GrayRaster& img, int threshold)
{
    if (threshold < 0 || threshold > 255) throw std::invalid_argument("threshold must be in [0,255]");
    const int w = img.width();
    const int h = img.height();
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        auto src = img.row(y);
        std::uint8_t* dst = bits.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) dst[x] = src[x] < threshold ? 1 : 0;
    }
    return BitRaster(w, h, std::move(bits));
}

BitRaster erode(const BitRaster& img, const StructuringKernel& k)
{
    return morph(img, k, Op::Erode);
}

BitRaster dilate(const BitRaster& img, const StructuringKernel& k)
{
    return morph(img, k, Op::Dilate);
}

BitRaster close(const BitRaster& img, const StructuringKernel& k)
{
    return erode(dilate(img, k), k);
}

BitRaster open(const BitRaster& img, const StructuringKernel& k)
{
    return dilate(erode(img, k), k);
}

BitRaster complement(const BitRaster& img)
{
    std::vector<std::uint8_t> bits(img.data());
    for (auto& b : bits) b ^= 1;
    return BitRaster(img.width(), img.height(), std::move(bits));
}

BitRaster merge_text_blobs(const GrayRaster& img, const MergeConfig& cfg)
{
    cfg.validate();
    BitRaster bits = threshold_invert(img, cfg.threshold);
    for (int i = 0; i < cfg.close_iterations; ++i) bits = close(bits, cfg.kernel);
    for (int i = 0; i < cfg.open_iterations; ++i) bits = open(bits, cfg.kernel);
    return bits;
}

} // namespace regmine
