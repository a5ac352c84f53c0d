#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "regmine/contours.hpp"
#include "regmine/font.hpp"
#include "regmine/geocode.hpp"
#include "regmine/raster.hpp"
#include "regmine/rng.hpp"

namespace regmine::synth {

struct NoiseModel {
    double salt_pepper_rate = 0;    // fraction of pixels overwritten with black or white
    double glyph_corrupt_rate = 0;  // fraction of glyph cells replaced by random bits
};

enum class Separation {
    BlankLine,  // records separated by a wide vertical gap
    Indent,     // records touch; each starts with an indented first line
};

struct SynthSpec {
    std::uint64_t seed = 42;
    int pages = 5;
    int columns = 2;
    int records_min = 10;  // per column per page
    int records_max = 10;
    double heading_frequency = 0.15;  // chance of a city heading before each record
    bool centered_heading = false;    // one page-wide heading splitting each page in two
    int jitter_px = 0;                // horizontal offset of each block, uniform in [-j, j]
    std::optional<NoiseModel> noise;
    Separation separation = Separation::BlankLine;
    int year = 1900;

    int column_chars = 28;
    int margin = 60;
    int gutter = 48;
    int line_gap = 4;
    int record_gap = 24;
    int indent_cells = 3;
    bool page_numbers = true;
    int page_width = 0;  // 0: just large enough for the content
    int page_height = 0;
    double po_box_rate = 0.03;

    /// Records are laid out so that a closing with this rectangle joins all
    /// of their glyphs; arrangements that would fall apart are re-drawn.
    int merge_kernel_width = 5;
    int merge_kernel_height = 9;

    font::Metrics metrics;

    /// Throws std::invalid_argument.
    void validate() const;
};

struct SynthRecord {
    std::string name;
    std::string address;
    std::string sector;
    int employees_min = 0;
    int employees_max = 0;
    std::optional<LatLon> location;

    /// `NAME, ADDRESS; SECTOR; N-M EMP`
    std::string text() const;
};

/// One block of a page column.
struct ColumnItem {
    bool is_heading = false;
    std::string city;     // headings
    SynthRecord record;   // records
    /// Text lines as laid out: (first cell, word) pairs per line.
    std::vector<std::vector<std::pair<int, std::string>>> lines;
    int jitter = 0;
};

struct PageSection {
    std::optional<std::string> centered_heading;
    std::vector<std::vector<ColumnItem>> columns;
};

struct PageContent {
    int number = 1;
    std::vector<PageSection> sections;
};

struct TruthRecord {
    int page = 0;
    int index = 0;  // reading order within the page
    std::string name;
    std::string address;
    std::string city;
    std::string sector;
    int employees_min = 0;
    int employees_max = 0;
    std::optional<LatLon> location;
    BBox bbox;
};

struct PageTruth {
    int page = 0;
    std::vector<TruthRecord> records;
    std::optional<std::string> carry_out;  // heading in force after the page
};

struct RenderedPage {
    GrayRaster image;
    PageTruth truth;
    std::size_t noisy_pixels = 0;
    std::size_t corrupted_glyphs = 0;
};

/// Content for every page in print order. Requires a gazetteer with at least
/// one street.
std::vector<PageContent> generate_content(const SynthSpec& spec, const Gazetteer& gazetteer);

/// Draws one page. `carry` is the city heading in force from the previous
/// page; the truth records list cities in reading order. Throws
/// std::invalid_argument for text outside the font.
RenderedPage render_page(const PageContent& content, const SynthSpec& spec, std::optional<std::string> carry);

/// Page geometry for a content list (auto-sized unless SynthSpec fixes it).
struct PageGeometry {
    int width = 0;
    int height = 0;
};
PageGeometry page_geometry(const PageContent& content, const SynthSpec& spec);

/// Draws `text` with its first cell at (x, y). Throws std::invalid_argument
/// for unsupported characters.
void draw_text(GrayRaster& img, int x, int y, std::string_view text, const font::Metrics& metrics);

/// Overwrites each pixel with probability `rate`, half black, half white.
/// Returns how many pixel values actually changed.
std::size_t apply_salt_pepper(GrayRaster& img, double rate, Rng& rng);

/// Wraps words into lines of `column_chars` cells (the first line starts
/// `first_indent` cells in). One line ending in a letter or digit is
/// justified flush to the right edge; others are justified or left ragged at
/// random. Returns nullopt when no arrangement keeps the block connected
/// under a closing with the spec's merge kernel.
std::optional<std::vector<std::vector<std::pair<int, std::string>>>> layout_words(
    const std::vector<std::string>& words, int first_indent, const SynthSpec& spec, Rng& rng);

struct Corpus {
    std::vector<PageTruth> pages;
    std::size_t total_records() const;
};

/// Writes pages/NNN.pgm, truth.csv and gazetteer.txt under `dir`.
Corpus generate_corpus(const SynthSpec& spec, const Gazetteer& gazetteer, const std::filesystem::path& dir);

/// Renders every page in memory.
struct MemoryCorpus {
    std::vector<GrayRaster> images;
    std::vector<PageTruth> truth;
    std::size_t total_records() const;
};
MemoryCorpus render_corpus(const SynthSpec& spec, const Gazetteer& gazetteer);

void write_truth(const std::filesystem::path& path, const std::vector<PageTruth>& pages);
std::vector<TruthRecord> read_truth(const std::filesystem::path& path);

} // namespace regmine::synth
