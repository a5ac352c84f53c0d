#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace regmine::font {

/// Fixed 5x7 bitmap font. Every letter and digit touches both the left and
/// the right cell column, so a text line's ink starts exactly at its first
/// cell and ends exactly at its last one.
inline constexpr int kGlyphCols = 5;
inline constexpr int kGlyphRows = 7;
/// Blank columns between neighboring cells, in font pixels.
inline constexpr int kSpacingCols = 1;
inline constexpr int kAdvanceCols = kGlyphCols + kSpacingCols;

/// Characters the font can draw, in template order. Space is implicit.
inline constexpr std::string_view kCharset = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,;-&()/'";

/// Row-major, one bit per pixel: bit (kGlyphCols - 1 - col) of rows[row].
struct Glyph {
    char ch;
    std::array<std::uint8_t, kGlyphRows> rows;

    bool ink(int col, int row) const { return (rows[row] >> (kGlyphCols - 1 - col)) & 1u; }
};

/// Glyph for `ch`, or nullopt if the font has no such character.
std::optional<Glyph> glyph(char ch);

bool supports(char ch);

/// True when every character is in the charset or is a space.
bool supports_text(std::string_view s);

/// All glyphs in charset order.
const std::array<Glyph, kCharset.size()>& glyphs();

/// Scaled metrics used by the renderer and the mock recognizer.
struct Metrics {
    int scale = 2;

    int cell_width() const { return kGlyphCols * scale; }
    int cell_height() const { return kGlyphRows * scale; }
    int advance() const { return kAdvanceCols * scale; }
    int spacing() const { return kSpacingCols * scale; }
};

/// UTF-8 encoding of U+FFFD, emitted for cells that match no glyph.
inline constexpr std::string_view kReplacement = "\xEF\xBF\xBD";

} // namespace regmine::font
