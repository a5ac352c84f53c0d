#pragma once

#include "regmine/raster.hpp"

// Serial, straight-from-the-definition morphology. Quadratic in the kernel
// area and single threaded; used as the oracle for the parallel kernels in
// raster.hpp and as the baseline in the benchmark.
namespace regmine::reference {

BitRaster threshold_invert(const GrayRaster& img, int threshold);

/// p stays 1 iff every pixel of K_p is 1 (outside pixels read as 0).
BitRaster erode(const BitRaster& img, const StructuringKernel& k);

/// Scatter K_p for every foreground p; writes outside the image are dropped.
BitRaster dilate(const BitRaster& img, const StructuringKernel& k);

BitRaster close(const BitRaster& img, const StructuringKernel& k);
BitRaster open(const BitRaster& img, const StructuringKernel& k);
BitRaster merge_text_blobs(const GrayRaster& img, const MergeConfig& cfg);

} // namespace regmine::reference
