#pragma once

// Generators and brute-force oracles shared by the unit tests.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "regmine/raster.hpp"
#include "regmine/rng.hpp"

namespace testing {

inline regmine::BitRaster random_bits(regmine::Rng& rng, int w, int h, double density)
{
    regmine::BitRaster img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) img.at(x, y) = rng.chance(density) ? 1 : 0;
    }
    return img;
}

inline regmine::GrayRaster random_gray(regmine::Rng& rng, int w, int h)
{
    regmine::GrayRaster img(w, h);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

// Random rectangle blobs, so components have real extent.
inline regmine::BitRaster random_blobs(regmine::Rng& rng, int w, int h, int count, int max_side)
{
    regmine::BitRaster img(w, h);
    for (int i = 0; i < count; ++i) {
        const int bw = static_cast<int>(rng.range(1, max_side));
        const int bh = static_cast<int>(rng.range(1, max_side));
        const int x0 = static_cast<int>(rng.range(0, w - 1));
        const int y0 = static_cast<int>(rng.range(0, h - 1));
        for (int y = y0; y < std::min(h, y0 + bh); ++y) {
            for (int x = x0; x < std::min(w, x0 + bw); ++x) img.at(x, y) = 1;
        }
    }
    return img;
}

inline bool subset(const regmine::BitRaster& a, const regmine::BitRaster& b)
{
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        if (a.data()[i] && !b.data()[i]) return false;
    }
    return true;
}

inline regmine::BitRaster pad(const regmine::BitRaster& img, int px, int py, std::uint8_t fill)
{
    regmine::BitRaster out(img.width() + 2 * px, img.height() + 2 * py, fill);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) out.at(x + px, y + py) = img.at(x, y);
    }
    return out;
}

inline regmine::BitRaster crop(const regmine::BitRaster& img, int px, int py, int w, int h)
{
    regmine::BitRaster out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x + px, y + py);
    }
    return out;
}

struct FloodComponent {
    int left, top, right, bottom;  // right/bottom exclusive
    std::int64_t pixels;
};

// 8-connected components by explicit stack flood fill, in raster order of
// their first pixel.
inline std::vector<FloodComponent> flood_components(const regmine::BitRaster& img)
{
    const int w = img.width();
    const int h = img.height();
    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<FloodComponent> out;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!img.at(x, y) || label[static_cast<std::size_t>(y) * w + x] >= 0) continue;
            FloodComponent c{x, y, x + 1, y + 1, 0};
            const int id = static_cast<int>(out.size());
            stack.push_back({x, y});
            label[static_cast<std::size_t>(y) * w + x] = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                ++c.pixels;
                c.left = std::min(c.left, cx);
                c.top = std::min(c.top, cy);
                c.right = std::max(c.right, cx + 1);
                c.bottom = std::max(c.bottom, cy + 1);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx;
                        const int ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h || !img.at(nx, ny)) continue;
                        int& l = label[static_cast<std::size_t>(ny) * w + nx];
                        if (l >= 0) continue;
                        l = id;
                        stack.push_back({nx, ny});
                    }
                }
            }
            out.push_back(c);
        }
    }
    return out;
}

// Levenshtein distance from the full (|a|+1) x (|b|+1) matrix.
inline std::size_t levenshtein_matrix(const std::string& a, const std::string& b)
{
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
        }
    }
    return d[a.size()][b.size()];
}

inline std::string random_word(regmine::Rng& rng, std::size_t max_len, std::string_view alphabet = "ABCDE")
{
    const std::size_t n = rng.below(max_len + 1);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
    return s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        regmine::Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
        path_ = std::filesystem::temp_directory_path() / ("regmine-" + tag + "-" + std::to_string(rng.next() % 1000000007));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace testing
