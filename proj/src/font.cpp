#include "regmine/font.hpp"

#include <string_view>

namespace regmine::font {

namespace {

struct GlyphSource {
    char ch;
    std::string_view rows[kGlyphRows];
};

// clang-format off
constexpr GlyphSource kSource[] = {
    {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
    {'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
    {'D', {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."}},
    {'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
    {'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
    {'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."}},
    {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'I', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "#####"}},
    {'J', {"#####", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
    {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
    {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
    {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
    {'N', {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
    {'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
    {'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
    {'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
    {'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
    {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
    {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
    {'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."}},
    {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
    {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
    {'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
    {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
    {'1', {"..#..", ".##..", "#.#..", "..#..", "..#..", "..#..", "#####"}},
    {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
    {'3', {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."}},
    {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
    {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
    {'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
    {'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
    {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
    {'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
    {'.', {".....", ".....", ".....", ".....", ".....", "##...", "##..."}},
    {',', {".....", ".....", ".....", ".....", "##...", ".#...", "#...."}},
    {';', {".....", "##...", "##...", ".....", "##...", ".#...", "#...."}},
    {'-', {".....", ".....", ".....", "#####", ".....", ".....", "....."}},
    {'&', {".##..", "#..#.", "#.#..", ".#...", "#.#.#", "#..#.", ".##.#"}},
    {'(', {"..###", ".#...", "#....", "#....", "#....", ".#...", "..###"}},
    {')', {"###..", "...#.", "....#", "....#", "....#", "...#.", "###.."}},
    {'/', {"....#", "....#", "...#.", "..#..", ".#...", "#....", "#...."}},
    {'\'', {".##..", ".##..", ".#...", ".....", ".....", ".....", "....."}},
};
// clang-format on

static_assert(std::size(kSource) == kCharset.size());

std::array<Glyph, kCharset.size()> build()
{
    std::array<Glyph, kCharset.size()> out{};
    for (std::size_t i = 0; i < kCharset.size(); ++i) {
        out[i].ch = kSource[i].ch;
        for (int r = 0; r < kGlyphRows; ++r) {
            std::uint8_t bits = 0;
            for (int c = 0; c < kGlyphCols; ++c) {
                bits = static_cast<std::uint8_t>((bits << 1) | (kSource[i].rows[r][c] == '#' ? 1 : 0));
            }
            out[i].rows[r] = bits;
        }
    }
    return out;
}

} // namespace

const std::array<Glyph, kCharset.size()>& glyphs()
{
    static const auto table = build();
    return table;
}

std::optional<Glyph> glyph(char ch)
{
    const auto pos = kCharset.find(ch);
    if (pos == std::string_view::npos) return std::nullopt;
    return glyphs()[pos];
}

bool supports(char ch)
{
    return kCharset.find(ch) != std::string_view::npos;
}

bool supports_text(std::string_view s)
{
    for (char c : s) {
        if (c != ' ' && !supports(c)) return false;
    }
    return true;
}

} // namespace regmine::font
