#pragma once

#include <cstdint>
#include <vector>

#include "regmine/image_io.hpp"
#include "regmine/raster.hpp"

namespace regmine {

struct Point {
    int x = 0;
    int y = 0;
    bool operator==(const Point&) const = default;
};

/// Pixel box, inclusive left/top and exclusive right/bottom.
struct BBox {
    int left = 0;
    int top = 0;
    int right = 0;
    int bottom = 0;

    int width() const { return right - left; }
    int height() const { return bottom - top; }
    double center_x() const { return 0.5 * (left + right); }
    bool valid() const { return left < right && top < bottom; }
    bool operator==(const BBox&) const = default;
};

/// Outer border of one 8-connected foreground component.
struct Contour {
    std::vector<Point> boundary;  // closed, consecutive points 8-adjacent
    BBox bbox;
    std::int64_t area = 0;        // pixels in the component, holes excluded
};

/// One contour per 8-connected component, ordered by (bbox.top, bbox.left).
/// Boundaries come from Suzuki-Abe outer border following; holes are ignored.
std::vector<Contour> extract_contours(const BitRaster& img);

/// Splits a merged block wherever its left edge steps right by more than
/// `indent_px` for at least `min_rows` consecutive rows after a flush row.
/// Returns top-to-bottom boxes that tile the contour's rows; each box is
/// horizontally tight around its own rows. Returns {c.bbox} when nothing
/// qualifies. Throws std::invalid_argument if indent_px >= bbox width.
std::vector<BBox> split_at_indentations(const Contour& c, const BitRaster& img, int indent_px, int min_rows);

/// Draws 2-px rectangle outlines onto an overlay image.
void draw_boxes(RgbImage& canvas, const std::vector<BBox>& boxes, std::uint8_t r, std::uint8_t g,
                std::uint8_t b);

} // namespace regmine
