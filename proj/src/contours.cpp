#include "regmine/contours.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace regmine {

namespace {

// Neighbor offsets, counterclockwise on screen (y grows downward): E, NE, N,
// NW, W, SW, S, SE.
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};
constexpr int kWest = 4;

int direction_of(Point from, Point to)
{
    for (int d = 0; d < 8; ++d) {
        if (from.x + kDx[d] == to.x && from.y + kDy[d] == to.y) return d;
    }
    return -1;
}

// Outer border following from the raster-first pixel of a component, whose
// west neighbor is background by construction.
std::vector<Point> follow_outer_border(const BitRaster& img, Point start)
{
    std::vector<Point> border;
    // Clockwise scan from the west neighbor for the first foreground pixel.
    int found = -1;
    for (int step = 0; step < 8; ++step) {
        const int d = (kWest - step + 8) % 8;
        if (img.get(start.x + kDx[d], start.y + kDy[d])) {
            found = d;
            break;
        }
    }
    if (found < 0) {
        border.push_back(start);
        return border;
    }
    const Point first_neighbor{start.x + kDx[found], start.y + kDy[found]};
    Point prev = first_neighbor;
    Point cur = start;
    for (;;) {
        border.push_back(cur);
        // Counterclockwise scan around cur, starting just after prev.
        const int back = direction_of(cur, prev);
        Point next = cur;
        for (int step = 1; step <= 8; ++step) {
            const int d = (back + step) % 8;
            if (img.get(cur.x + kDx[d], cur.y + kDy[d])) {
                next = {cur.x + kDx[d], cur.y + kDy[d]};
                break;
            }
        }
        if (next == start && cur == first_neighbor) break;
        prev = cur;
        cur = next;
    }
    return border;
}

} // namespace

std::vector<Contour> extract_contours(const BitRaster& img)
{
    const int w = img.width();
    const int h = img.height();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
    std::vector<Contour> contours;
    std::vector<Point> stack;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!img.at(x, y) || seen[idx]) continue;

            Contour c;
            c.bbox = {x, y, x + 1, y + 1};
            seen[idx] = 1;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Point p = stack.back();
                stack.pop_back();
                ++c.area;
                c.bbox.left = std::min(c.bbox.left, p.x);
                c.bbox.right = std::max(c.bbox.right, p.x + 1);
                c.bbox.top = std::min(c.bbox.top, p.y);
                c.bbox.bottom = std::max(c.bbox.bottom, p.y + 1);
                for (int d = 0; d < 8; ++d) {
                    const int nx = p.x + kDx[d];
                    const int ny = p.y + kDy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                    if (img.at(nx, ny) && !seen[nidx]) {
                        seen[nidx] = 1;
                        stack.push_back({nx, ny});
                    }
                }
            }
            c.boundary = follow_outer_border(img, {x, y});
            contours.push_back(std::move(c));
        }
    }
    // Raster discovery order already sorts by top; ties on top by left.
    std::stable_sort(contours.begin(), contours.end(), [](const Contour& a, const Contour& b) {
        if (a.bbox.top != b.bbox.top) return a.bbox.top < b.bbox.top;
        return a.bbox.left < b.bbox.left;
    });
    return contours;
}

std::vector<BBox> split_at_indentations(const Contour& c, const BitRaster& img, int indent_px, int min_rows)
{
    if (indent_px <= 0) throw std::invalid_argument("indent_px must be positive");
    if (min_rows < 1) throw std::invalid_argument("min_rows must be >= 1");
    const BBox& box = c.bbox;
    if (!box.valid() || box.right > img.width() || box.bottom > img.height() || box.left < 0 || box.top < 0) {
        throw std::invalid_argument("contour box lies outside the image");
    }
    if (indent_px >= box.width()) {
        throw std::invalid_argument("indent_px " + std::to_string(indent_px) + " is not below contour width " +
                                    std::to_string(box.width()));
    }

    // The leftmost and rightmost pixels of every row lie on the outer border,
    // so the border alone gives the row profile.
    const int rows = box.height();
    std::vector<int> leftmost(rows, std::numeric_limits<int>::max());
    std::vector<int> rightmost(rows, std::numeric_limits<int>::min());
    for (const Point& p : c.boundary) {
        const int r = p.y - box.top;
        leftmost[r] = std::min(leftmost[r], p.x);
        rightmost[r] = std::max(rightmost[r], p.x);
    }

    const int limit = box.left + indent_px;
    std::vector<char> indented(rows);
    for (int r = 0; r < rows; ++r) indented[r] = leftmost[r] > limit;

    std::vector<int> cuts{0};
    for (int r = 1; r < rows; ++r) {
        if (!indented[r] || indented[r - 1]) continue;
        int run = 0;
        while (r + run < rows && indented[r + run]) ++run;
        if (run >= min_rows) cuts.push_back(r);
    }
    if (cuts.size() == 1) return {box};
    cuts.push_back(rows);

    std::vector<BBox> out;
    out.reserve(cuts.size() - 1);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        BBox seg{std::numeric_limits<int>::max(), box.top + cuts[i], std::numeric_limits<int>::min(),
                 box.top + cuts[i + 1]};
        for (int r = cuts[i]; r < cuts[i + 1]; ++r) {
            seg.left = std::min(seg.left, leftmost[r]);
            seg.right = std::max(seg.right, rightmost[r] + 1);
        }
        out.push_back(seg);
    }
    return out;
}

void draw_boxes(RgbImage& canvas, const std::vector<BBox>& boxes, std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
    for (const BBox& box : boxes) {
        for (int t = 0; t < 2; ++t) {
            for (int x = box.left - t; x < box.right + t; ++x) {
                canvas.set(x, box.top - 1 - t, r, g, b);
                canvas.set(x, box.bottom + t, r, g, b);
            }
            for (int y = box.top - t; y < box.bottom + t; ++y) {
                canvas.set(box.left - 1 - t, y, r, g, b);
                canvas.set(box.right + t, y, r, g, b);
            }
        }
    }
}

} // namespace regmine
