#include "regmine/raster_reference.hpp"

#include <stdexcept>

namespace regmine::reference {

BitRaster threshold_invert(const GrayRaster& img, int threshold)
{
    if (threshold < 0 || threshold > 255) throw std::invalid_argument("threshold must be in [0,255]");
    BitRaster out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.at(x, y) = img.at(x, y) < threshold ? 1 : 0;
        }
    }
    return out;
}

BitRaster erode(const BitRaster& img, const StructuringKernel& k)
{
    BitRaster out(img.width(), img.height());
    const int hw = k.half_width();
    const int hh = k.half_height();
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            bool all = true;
            for (int dy = -hh; dy <= hh && all; ++dy) {
                for (int dx = -hw; dx <= hw && all; ++dx) {
                    all = img.get(x + dx, y + dy) == 1;
                }
            }
            out.at(x, y) = all ? 1 : 0;
        }
    }
    return out;
}

BitRaster dilate(const BitRaster& img, const StructuringKernel& k)
{
    BitRaster out(img.width(), img.height());
    const int hw = k.half_width();
    const int hh = k.half_height();
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (!img.at(x, y)) continue;
            for (int dy = -hh; dy <= hh; ++dy) {
                for (int dx = -hw; dx <= hw; ++dx) {
                    const int qx = x + dx;
                    const int qy = y + dy;
                    if (qx >= 0 && qy >= 0 && qx < img.width() && qy < img.height()) out.at(qx, qy) = 1;
                }
            }
        }
    }
    return out;
}

BitRaster close(const BitRaster& img, const StructuringKernel& k)
{
    return reference::erode(reference::dilate(img, k), k);
}

BitRaster open(const BitRaster& img, const StructuringKernel& k)
{
    return reference::dilate(reference::erode(img, k), k);
}

BitRaster merge_text_blobs(const GrayRaster& img, const MergeConfig& cfg)
{
    cfg.validate();
    BitRaster bits = reference::threshold_invert(img, cfg.threshold);
    for (int i = 0; i < cfg.close_iterations; ++i) bits = reference::close(bits, cfg.kernel);
    for (int i = 0; i < cfg.open_iterations; ++i) bits = reference::open(bits, cfg.kernel);
    return bits;
}

} // namespace regmine::reference
