#include "regmine/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "regmine/error.hpp"
#include "regmine/image_io.hpp"
#include "regmine/text.hpp"

namespace regmine::synth {

namespace fs = std::filesystem;

using Line = std::vector<std::pair<int, std::string>>;

void SynthSpec::validate() const
{
    auto fail = [](const std::string& what) { throw std::invalid_argument("synth spec: " + what); };
    if (pages < 0) fail("pages must be >= 0");
    if (columns < 1) fail("columns must be >= 1");
    if (records_min < 0 || records_max < records_min) fail("records range is empty");
    if (heading_frequency < 0 || heading_frequency > 1) fail("heading_frequency must be in [0,1]");
    if (jitter_px < 0) fail("jitter_px must be >= 0");
    if (noise) {
        if (noise->salt_pepper_rate < 0 || noise->salt_pepper_rate > 1) fail("salt_pepper_rate must be in [0,1]");
        if (noise->glyph_corrupt_rate < 0 || noise->glyph_corrupt_rate > 1) fail("glyph_corrupt_rate must be in [0,1]");
    }
    if (column_chars < 16) fail("column_chars must be >= 16");
    if (indent_cells < 1 || indent_cells >= column_chars / 2) fail("indent_cells out of range");
    if (margin < jitter_px + 2 || gutter < 2 * jitter_px + 2) fail("margin or gutter too small for the jitter");
    if (line_gap < 0 || record_gap < 0) fail("gaps must be >= 0");
    if (po_box_rate < 0 || po_box_rate > 1) fail("po_box_rate must be in [0,1]");
    if (metrics.scale < 1) fail("font scale must be >= 1");
    if (merge_kernel_width < 1 || merge_kernel_height < 1) fail("merge kernel sides must be >= 1");
}

std::string SynthRecord::text() const
{
    const std::string emp = employees_min == employees_max
                                ? std::to_string(employees_min)
                                : std::to_string(employees_min) + "-" + std::to_string(employees_max);
    return name + ", " + address + "; " + sector + "; " + emp + " EMP";
}

std::size_t Corpus::total_records() const
{
    std::size_t n = 0;
    for (const auto& p : pages) n += p.records.size();
    return n;
}

std::size_t MemoryCorpus::total_records() const
{
    std::size_t n = 0;
    for (const auto& p : truth) n += p.records.size();
    return n;
}

// ---------------------------------------------------------------------------
// Word layout

namespace {

bool full_width(char c)
{
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

int find_root(std::vector<int>& parent, int i)
{
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

// Per glyph: for every pixel column the first and last inked pixel row, and
// for every pixel row the first and last inked pixel column.
struct GlyphInk {
    std::vector<int> col_top, col_bottom, row_left, row_right;  // -1 when empty
};

GlyphInk glyph_ink(char c, const font::Metrics& m)
{
    GlyphInk ink;
    ink.col_top.assign(m.cell_width(), -1);
    ink.col_bottom.assign(m.cell_width(), -1);
    ink.row_left.assign(m.cell_height(), -1);
    ink.row_right.assign(m.cell_height(), -1);
    const auto g = font::glyph(c);
    for (int py = 0; py < m.cell_height(); ++py) {
        for (int px = 0; px < m.cell_width(); ++px) {
            if (!g->ink(px / m.scale, py / m.scale)) continue;
            if (ink.col_top[px] < 0) ink.col_top[px] = py;
            ink.col_bottom[px] = py;
            if (ink.row_left[py] < 0) ink.row_left[py] = px;
            ink.row_right[py] = px;
        }
    }
    return ink;
}

class InkTable {
public:
    explicit InkTable(const font::Metrics& m)
    {
        for (char c : font::kCharset) table_[static_cast<unsigned char>(c)] = glyph_ink(c, m);
    }
    const GlyphInk& operator[](char c) const { return table_[static_cast<unsigned char>(c)]; }

private:
    std::array<GlyphInk, 256> table_;
};

struct Cell {
    const GlyphInk* ink;
    int x;  // block-relative pixel origin
    int y;
};

// A closing with a w x h rectangle fills the run between two inked pixels of
// one row when they are at most w apart, and of one column when at most h
// apart. Two cells are treated as joined only through such a run.
bool joined_in_row(const Cell& a, const Cell& b, int w)
{
    for (std::size_t r = 0; r < a.ink->row_right.size(); ++r) {
        if (a.ink->row_right[r] < 0 || b.ink->row_left[r] < 0) continue;
        const int gap = (b.x + b.ink->row_left[r]) - (a.x + a.ink->row_right[r]);
        if (gap > 0 && gap <= w) return true;
    }
    return false;
}

bool joined_in_column(const Cell& upper, const Cell& lower, int h)
{
    const auto& up = *upper.ink;
    const auto& lo = *lower.ink;
    for (std::size_t cu = 0; cu < up.col_bottom.size(); ++cu) {
        if (up.col_bottom[cu] < 0) continue;
        const int cl = upper.x + static_cast<int>(cu) - lower.x;
        if (cl < 0 || cl >= static_cast<int>(lo.col_top.size()) || lo.col_top[cl] < 0) continue;
        const int gap = (lower.y + lo.col_top[cl]) - (upper.y + up.col_bottom[cu]);
        if (gap > 0 && gap <= h) return true;
    }
    return false;
}

bool connected(const std::vector<Line>& lines, const SynthSpec& spec)
{
    const auto& m = spec.metrics;
    static thread_local std::unique_ptr<InkTable> table;
    static thread_local int table_scale = 0;
    if (!table || table_scale != m.scale) {
        table = std::make_unique<InkTable>(m);
        table_scale = m.scale;
    }
    std::vector<Cell> cells;
    std::vector<std::size_t> line_start;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        line_start.push_back(cells.size());
        const int y = static_cast<int>(i) * (m.cell_height() + spec.line_gap);
        for (const auto& [cell, word] : lines[i]) {
            for (std::size_t k = 0; k < word.size(); ++k) {
                cells.push_back({&(*table)[word[k]], (cell + static_cast<int>(k)) * m.advance(), y});
            }
        }
    }
    line_start.push_back(cells.size());

    std::vector<int> parent(cells.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto unite = [&](std::size_t a, std::size_t b) {
        parent[find_root(parent, static_cast<int>(a))] = find_root(parent, static_cast<int>(b));
    };
    for (std::size_t li = 0; li < lines.size(); ++li) {
        for (std::size_t a = line_start[li]; a + 1 < line_start[li + 1]; ++a) {
            if (joined_in_row(cells[a], cells[a + 1], spec.merge_kernel_width)) unite(a, a + 1);
        }
        if (li + 1 == lines.size()) continue;
        // cells are sorted by x within a line
        std::size_t first = line_start[li + 1];
        for (std::size_t a = line_start[li]; a < line_start[li + 1]; ++a) {
            while (first < line_start[li + 2] && cells[first].x <= cells[a].x - m.cell_width()) ++first;
            for (std::size_t b = first; b < line_start[li + 2] && cells[b].x < cells[a].x + m.cell_width(); ++b) {
                if (joined_in_column(cells[a], cells[b], spec.merge_kernel_height)) unite(a, b);
            }
        }
    }
    for (std::size_t i = 1; i < cells.size(); ++i) {
        if (find_root(parent, static_cast<int>(i)) != find_root(parent, 0)) return false;
    }
    return true;
}

} // namespace

std::optional<std::vector<Line>> layout_words(const std::vector<std::string>& words, int first_indent,
                                              const SynthSpec& spec, Rng& rng)
{
    // Greedy wrap into lines of word indices.
    std::vector<std::vector<std::size_t>> wrapped;
    int used = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        const int len = static_cast<int>(words[i].size());
        const int cap = spec.column_chars - (wrapped.size() == 1 ? first_indent : 0);
        if (!wrapped.empty() && used + 1 + len <= cap) {
            wrapped.back().push_back(i);
            used += 1 + len;
            continue;
        }
        const int fresh_cap = spec.column_chars - (wrapped.empty() ? first_indent : 0);
        if (len > fresh_cap) return std::nullopt;
        wrapped.push_back({i});
        used = len;
    }
    if (wrapped.empty()) return std::nullopt;
    if (first_indent > 0 && wrapped.size() < 2) return std::nullopt;

    // Some justified line must end in a glyph that reaches the right cell edge.
    std::vector<std::size_t> flush_candidates;
    for (std::size_t li = 0; li < wrapped.size(); ++li) {
        if (wrapped[li].size() >= 2 && full_width(words[wrapped[li].back()].back())) flush_candidates.push_back(li);
    }
    if (flush_candidates.empty()) return std::nullopt;

    for (int attempt = 0; attempt < 256; ++attempt) {
        const std::size_t flush = rng.pick(flush_candidates);
        std::vector<Line> lines;
        for (std::size_t li = 0; li < wrapped.size(); ++li) {
            const auto& idx = wrapped[li];
            const int start = li == 0 ? first_indent : 0;
            const int cap = spec.column_chars - start;
            const int gaps = static_cast<int>(idx.size()) - 1;
            int text_len = gaps;
            for (std::size_t w : idx) text_len += static_cast<int>(words[w].size());
            std::vector<int> extra(std::max(gaps, 0), 0);
            if (gaps > 0 && (li == flush || rng.chance(0.5))) {
                for (int s = 0; s < cap - text_len; ++s) ++extra[rng.below(static_cast<std::uint64_t>(gaps))];
            }
            Line line;
            int pos = start;
            for (std::size_t k = 0; k < idx.size(); ++k) {
                line.emplace_back(pos, words[idx[k]]);
                pos += static_cast<int>(words[idx[k]].size()) + 1 + (k < extra.size() ? extra[k] : 0);
            }
            lines.push_back(std::move(line));
        }
        if (connected(lines, spec)) return lines;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Content

namespace {

constexpr const char* kSurnames[] = {
    "ALLEN",   "ANTHONY", "BAKER",  "BROWN",    "CARPENTER", "CHASE",  "CLARK",  "COOK",      "DAVIS",
    "DYER",    "FISHER",  "GORHAM", "GREENE",   "HARRIS",    "HAZARD", "HOPKINS", "JENCKES",  "KNIGHT",
    "LADD",    "MASON",   "MILLER", "MOWRY",    "NICHOLS",   "OLNEY",  "PECK",   "POTTER",    "RHODES",
    "SAYLES",  "SLATER",  "SMITH",  "SPRAGUE",  "TAFT",      "TILLINGHAST", "WARDWELL", "WATERMAN",
    "WILCOX",  "YOUNG",   "BRAYTON", "CONGDON", "ARNOLD",
};
constexpr const char* kSuffixes[] = {"CO", "MFG CO", "BROS", "AND SONS", "AND CO", "INC", "CORP", "WORKS"};
constexpr const char* kAdjectives[] = {"AMERICAN", "EAGLE", "ATLANTIC", "UNION", "NARRAGANSETT", "STAR",
                                       "CRESCENT", "PHENIX", "GLOBE", "ANCHOR", "OCEAN", "PIONEER"};
constexpr const char* kProducts[] = {"SCREW", "BELTING", "WIRE", "CHEMICAL", "MACHINE", "JEWELRY",
                                     "SILK", "LACE", "RUBBER", "YARN", "TOOL", "BOX", "FILE", "WEBBING"};
constexpr const char* kSectors[] = {
    "JEWELRY",     "COTTON GOODS", "WOOLEN GOODS", "WORSTED YARNS", "MACHINERY",  "SILVERWARE",
    "RUBBER GOODS", "IRON CASTINGS", "BRASS GOODS", "LACE",         "PAPER BOXES", "FILES",
    "SCREWS",      "TOOLS",        "DYEING AND BLEACHING", "KNIT GOODS", "WIRE", "ELASTIC WEBBING",
    "SILK GOODS",  "BELTING",
};
constexpr std::pair<int, int> kEmployeeBands[] = {{1, 4},    {5, 9},     {10, 19},   {20, 49},   {50, 99},
                                                  {100, 249}, {250, 499}, {500, 999}, {1000, 2499}};

std::string make_name(Rng& rng)
{
    switch (rng.below(3)) {
    case 0:
        return std::string(rng.pick(kSurnames)) + " " + rng.pick(kSuffixes);
    case 1: {
        std::string a = rng.pick(kSurnames);
        std::string b = rng.pick(kSurnames);
        while (b == a) b = rng.pick(kSurnames);
        return a + " AND " + b + (rng.chance(0.5) ? " CO" : "");
    }
    default: {
        static constexpr const char* tails[] = {"CO", "MFG CO", "WORKS"};
        return std::string(rng.pick(kAdjectives)) + " " + rng.pick(kProducts) + " " + rng.pick(tails);
    }
    }
}

struct Generator {
    const SynthSpec& spec;
    const Gazetteer& gazetteer;
    std::vector<std::string> cities;  // cities with at least one street

    std::string other_city(Rng& rng, const std::optional<std::string>& current) const
    {
        if (cities.size() == 1) return cities[0];
        for (;;) {
            const std::string& c = rng.pick(cities);
            if (!current || c != *current) return c;
        }
    }

    ColumnItem heading(const std::string& city) const
    {
        if (static_cast<int>(city.size()) > spec.column_chars) {
            throw std::invalid_argument("city '" + city + "' does not fit a column");
        }
        ColumnItem item;
        item.is_heading = true;
        item.city = city;
        item.lines = {{{0, city}}};
        return item;
    }

    ColumnItem record(Rng& rng, const std::string& city) const
    {
        const auto streets = gazetteer.streets(city);
        const int indent = spec.separation == Separation::Indent ? spec.indent_cells : 0;
        for (int attempt = 0; attempt < 500; ++attempt) {
            SynthRecord rec;
            rec.name = make_name(rng);
            if (rng.chance(spec.po_box_rate)) {
                rec.address = "P.O. BOX " + std::to_string(rng.range(10, 999));
            } else {
                const auto& [street, where] = rng.pick(streets);
                rec.address = std::to_string(rng.range(10, 1999)) + " " + street;
                rec.location = where;
            }
            rec.sector = rng.pick(kSectors);
            if (rng.chance(0.2)) {
                rec.employees_min = rec.employees_max = static_cast<int>(rng.range(10, 99));
            } else {
                const auto& [lo, hi] = rng.pick(kEmployeeBands);
                rec.employees_min = lo;
                rec.employees_max = hi;
            }
            auto lines = layout_words(text::split(rec.text(), ' '), indent, spec, rng);
            if (!lines) continue;
            ColumnItem item;
            item.record = std::move(rec);
            item.lines = std::move(*lines);
            return item;
        }
        throw std::runtime_error("synth: could not lay out a record that the merge kernel keeps in one piece");
    }
};

} // namespace

std::vector<PageContent> generate_content(const SynthSpec& spec, const Gazetteer& gazetteer)
{
    spec.validate();
    Generator gen{spec, gazetteer, {}};
    for (const auto& c : gazetteer.cities()) {
        if (!gazetteer.streets(c).empty()) gen.cities.push_back(c);
    }
    if (gen.cities.empty()) throw std::invalid_argument("synth: gazetteer has no streets");

    std::vector<PageContent> pages;
    std::optional<std::string> current;
    for (int p = 1; p <= spec.pages; ++p) {
        Rng rng(mix_seed(spec.seed, 2 * static_cast<std::uint64_t>(p)));
        PageContent page;
        page.number = p;
        const int nsections = spec.centered_heading ? 2 : 1;
        std::vector<int> per_column(spec.columns);
        for (int& n : per_column) n = static_cast<int>(rng.range(spec.records_min, spec.records_max));
        for (int s = 0; s < nsections; ++s) {
            PageSection section;
            if (s > 0) {
                section.centered_heading = gen.other_city(rng, current);
                current = section.centered_heading;
            }
            section.columns.resize(spec.columns);
            for (int c = 0; c < spec.columns; ++c) {
                const int first_half = per_column[c] / 2;
                const int count = nsections == 1 ? per_column[c] : (s == 0 ? first_half : per_column[c] - first_half);
                auto& items = section.columns[c];
                for (int k = 0; k < count; ++k) {
                    if (!current || rng.chance(spec.heading_frequency)) {
                        current = gen.other_city(rng, current);
                        items.push_back(gen.heading(*current));
                    }
                    items.push_back(gen.record(rng, *current));
                }
                for (auto& item : items) {
                    if (spec.jitter_px > 0) item.jitter = static_cast<int>(rng.range(-spec.jitter_px, spec.jitter_px));
                }
            }
            page.sections.push_back(std::move(section));
        }
        pages.push_back(std::move(page));
    }
    return pages;
}

// ---------------------------------------------------------------------------
// Rendering

void draw_text(GrayRaster& img, int x, int y, std::string_view text, const font::Metrics& metrics)
{
    const int s = metrics.scale;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == ' ') continue;
        const auto g = font::glyph(c);
        if (!g) throw std::invalid_argument(std::string("character '") + c + "' is not in the font");
        const int cx = x + static_cast<int>(i) * metrics.advance();
        for (int r = 0; r < font::kGlyphRows; ++r) {
            for (int col = 0; col < font::kGlyphCols; ++col) {
                if (!g->ink(col, r)) continue;
                for (int dy = 0; dy < s; ++dy) {
                    for (int dx = 0; dx < s; ++dx) {
                        const int px = cx + col * s + dx;
                        const int py = y + r * s + dy;
                        if (px >= 0 && py >= 0 && px < img.width() && py < img.height()) img.at(px, py) = 0;
                    }
                }
            }
        }
    }
}

std::size_t apply_salt_pepper(GrayRaster& img, double rate, Rng& rng)
{
    std::size_t changed = 0;
    if (rate <= 0) return 0;
    for (auto& px : img.data()) {
        if (!rng.chance(rate)) continue;
        const std::uint8_t v = rng.chance(0.5) ? 0 : 255;
        if (px != v) ++changed;
        px = v;
    }
    return changed;
}

namespace {

struct Frame {
    int width;
    int height;
    int x0;          // left of the first column
    int col_w;
    int content_w;
    int content_h;   // sections only
    std::vector<int> section_tops;
    std::vector<int> section_heights;  // columns only, without the centered heading
};

int item_height(const ColumnItem& item, const SynthSpec& spec)
{
    const int ch = spec.metrics.cell_height();
    if (item.is_heading) return ch + 4 + 2;
    const int n = static_cast<int>(item.lines.size());
    return n * ch + (n - 1) * spec.line_gap;
}

int gap_between(const ColumnItem& a, const ColumnItem& b, const SynthSpec& spec)
{
    if (a.is_heading || b.is_heading || spec.separation == Separation::BlankLine) return spec.record_gap;
    return spec.line_gap;
}

int centered_block_height(const SynthSpec& spec)
{
    return spec.metrics.cell_height() + 4 + 2;
}

Frame frame_for(const PageContent& content, const SynthSpec& spec)
{
    Frame f{};
    f.col_w = spec.column_chars * spec.metrics.advance() - spec.metrics.spacing();
    f.content_w = spec.columns * f.col_w + (spec.columns - 1) * spec.gutter;
    int y = 0;
    bool any = false;
    for (const auto& section : content.sections) {
        if (section.centered_heading) {
            if (any) y += spec.record_gap;
            y += centered_block_height(spec);
            any = true;
        }
        int h = 0;
        for (const auto& items : section.columns) {
            int col_h = 0;
            for (std::size_t i = 0; i < items.size(); ++i) {
                if (i > 0) col_h += gap_between(items[i - 1], items[i], spec);
                col_h += item_height(items[i], spec);
            }
            h = std::max(h, col_h);
        }
        if (h > 0 && any) y += spec.record_gap;
        f.section_tops.push_back(y);
        f.section_heights.push_back(h);
        y += h;
        if (h > 0) any = true;
    }
    f.content_h = y;
    const bool has_ink = any;
    const int footer = spec.page_numbers && has_ink ? spec.record_gap + spec.metrics.cell_height() : 0;
    const int need_w = f.content_w + 2 * spec.margin;
    const int need_h = f.content_h + footer + 2 * spec.margin;
    f.width = spec.page_width > 0 ? spec.page_width : need_w;
    f.height = spec.page_height > 0 ? spec.page_height : need_h;
    if (f.width < need_w || f.height < need_h) {
        throw std::invalid_argument("synth: page " + std::to_string(content.number) + " needs " +
                                    std::to_string(need_w) + "x" + std::to_string(need_h) + " pixels");
    }
    f.x0 = (f.width - f.content_w) / 2;
    return f;
}

struct Painter {
    GrayRaster& img;
    const SynthSpec& spec;
    Rng& rng;
    std::size_t corrupted = 0;

    void text(int x, int y, std::string_view s)
    {
        const double rate = spec.noise ? spec.noise->glyph_corrupt_rate : 0.0;
        const auto& m = spec.metrics;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == ' ') continue;
            const int cx = x + static_cast<int>(i) * m.advance();
            if (rate > 0 && rng.chance(rate)) {
                ++corrupted;
                for (int dy = 0; dy < m.cell_height(); ++dy) {
                    for (int dx = 0; dx < m.cell_width(); ++dx) {
                        if (rng.chance(0.5)) img.at(cx + dx, y + dy) = 0;
                    }
                }
                continue;
            }
            draw_text(img, cx, y, s.substr(i, 1), m);
        }
    }

    void rule(int x, int y, int w, int h)
    {
        for (int yy = y; yy < y + h; ++yy) {
            for (int xx = x; xx < x + w; ++xx) img.at(xx, yy) = 0;
        }
    }
};

int ink_left(char c)
{
    const auto g = font::glyph(c);
    int best = font::kGlyphCols;
    for (int r = 0; r < font::kGlyphRows; ++r) {
        for (int col = 0; col < font::kGlyphCols; ++col) {
            if (g->ink(col, r)) best = std::min(best, col);
        }
    }
    return best;
}

int ink_right(char c)
{
    const auto g = font::glyph(c);
    int best = -1;
    for (int r = 0; r < font::kGlyphRows; ++r) {
        for (int col = 0; col < font::kGlyphCols; ++col) {
            if (g->ink(col, r)) best = std::max(best, col);
        }
    }
    return best + 1;
}

} // namespace

PageGeometry page_geometry(const PageContent& content, const SynthSpec& spec)
{
    const Frame f = frame_for(content, spec);
    return {f.width, f.height};
}

RenderedPage render_page(const PageContent& content, const SynthSpec& spec, std::optional<std::string> carry)
{
    spec.validate();
    const Frame f = frame_for(content, spec);
    const auto& m = spec.metrics;
    const int adv = m.advance();
    const int ch = m.cell_height();
    const int s = m.scale;

    RenderedPage out;
    out.image = GrayRaster(f.width, f.height, 255);
    out.truth.page = content.number;
    Rng rng(mix_seed(spec.seed, 2 * static_cast<std::uint64_t>(content.number) + 1));
    Painter paint{out.image, spec, rng};

    std::optional<std::string> current = std::move(carry);
    const int top0 = spec.margin;
    bool any_ink = false;
    for (std::size_t si = 0; si < content.sections.size(); ++si) {
        const PageSection& section = content.sections[si];
        const int sec_top = top0 + f.section_tops[si];
        if (section.centered_heading) {
            const std::string& city = *section.centered_heading;
            const int text_w = static_cast<int>(city.size()) * adv - m.spacing();
            const int rule_w = std::max(static_cast<int>(0.6 * f.content_w), std::min(f.content_w, f.col_w + 4 * adv));
            const int y = sec_top - centered_block_height(spec) - (f.section_heights[si] > 0 ? spec.record_gap : 0);
            paint.text((f.width - text_w) / 2, y, city);
            paint.rule((f.width - rule_w) / 2, y + ch + 4, rule_w, 2);
            current = city;
            any_ink = true;
        }
        for (std::size_t c = 0; c < section.columns.size(); ++c) {
            const int col_left = f.x0 + static_cast<int>(c) * (f.col_w + spec.gutter);
            int y = sec_top;
            const auto& items = section.columns[c];
            for (std::size_t i = 0; i < items.size(); ++i) {
                const ColumnItem& item = items[i];
                if (i > 0) y += gap_between(items[i - 1], item, spec);
                const int left = col_left + item.jitter;
                any_ink = true;
                if (item.is_heading) {
                    paint.text(left, y, item.city);
                    paint.rule(left, y + ch + 4, f.col_w, 2);
                    current = item.city;
                } else {
                    BBox box{f.width, y, 0, y};
                    for (std::size_t li = 0; li < item.lines.size(); ++li) {
                        const int ly = y + static_cast<int>(li) * (ch + spec.line_gap);
                        const auto& line = item.lines[li];
                        for (const auto& [cell, word] : line) paint.text(left + cell * adv, ly, word);
                        const auto& [first_cell, first_word] = line.front();
                        const auto& [last_cell, last_word] = line.back();
                        box.left = std::min(box.left, left + first_cell * adv + ink_left(first_word.front()) * s);
                        box.right = std::max(box.right, left + (last_cell + static_cast<int>(last_word.size()) - 1) * adv +
                                                            ink_right(last_word.back()) * s);
                        box.bottom = ly + ch;
                    }
                    TruthRecord t;
                    t.page = content.number;
                    t.index = static_cast<int>(out.truth.records.size());
                    t.name = item.record.name;
                    t.address = item.record.address;
                    t.city = current.value_or("");
                    t.sector = item.record.sector;
                    t.employees_min = item.record.employees_min;
                    t.employees_max = item.record.employees_max;
                    t.location = item.record.location;
                    t.bbox = box;
                    out.truth.records.push_back(std::move(t));
                }
                y += item_height(item, spec);
            }
        }
    }
    if (spec.page_numbers && any_ink) {
        const std::string number = std::to_string(content.number);
        const int w = static_cast<int>(number.size()) * adv - m.spacing();
        paint.text((f.width - w) / 2, f.height - spec.margin - ch, number);
    }
    out.corrupted_glyphs = paint.corrupted;
    if (spec.noise) out.noisy_pixels = apply_salt_pepper(out.image, spec.noise->salt_pepper_rate, rng);
    out.truth.carry_out = current;
    return out;
}

// ---------------------------------------------------------------------------
// Corpus

namespace {

std::optional<std::string> carry_after(const PageContent& page, std::optional<std::string> carry)
{
    for (const auto& section : page.sections) {
        if (section.centered_heading) carry = section.centered_heading;
        for (const auto& items : section.columns) {
            for (const auto& item : items) {
                if (item.is_heading) carry = item.city;
            }
        }
    }
    return carry;
}

std::vector<std::optional<std::string>> carries(const std::vector<PageContent>& content)
{
    std::vector<std::optional<std::string>> in(content.size());
    std::optional<std::string> carry;
    for (std::size_t i = 0; i < content.size(); ++i) {
        in[i] = carry;
        carry = carry_after(content[i], carry);
    }
    return in;
}

std::string page_file_name(int page)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%03d.pgm", page);
    return buf;
}

} // namespace

namespace {

// exceptions must not leave an OpenMP region
void rethrow_first(const std::vector<std::exception_ptr>& errors)
{
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace

MemoryCorpus render_corpus(const SynthSpec& spec, const Gazetteer& gazetteer)
{
    const auto content = generate_content(spec, gazetteer);
    const auto carry_in = carries(content);
    MemoryCorpus out;
    out.images.resize(content.size());
    out.truth.resize(content.size());
    const auto n = static_cast<std::ptrdiff_t>(content.size());
    std::vector<std::exception_ptr> errors(content.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            RenderedPage page = render_page(content[i], spec, carry_in[i]);
            out.images[i] = std::move(page.image);
            out.truth[i] = std::move(page.truth);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    rethrow_first(errors);
    return out;
}

Corpus generate_corpus(const SynthSpec& spec, const Gazetteer& gazetteer, const fs::path& dir)
{
    if (gazetteer.empty()) throw std::invalid_argument("synth: gazetteer is empty");
    const auto content = generate_content(spec, gazetteer);
    const auto carry_in = carries(content);
    fs::create_directories(dir / "pages");

    Corpus corpus;
    corpus.pages.resize(content.size());
    const auto n = static_cast<std::ptrdiff_t>(content.size());
    std::vector<std::exception_ptr> errors(content.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            RenderedPage page = render_page(content[i], spec, carry_in[i]);
            write_pgm(dir / "pages" / page_file_name(content[i].number), page.image);
            corpus.pages[i] = std::move(page.truth);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    rethrow_first(errors);
    write_truth(dir / "truth.csv", corpus.pages);
    gazetteer.save(dir / "gazetteer.txt");
    return corpus;
}

void write_truth(const fs::path& path, const std::vector<PageTruth>& pages)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "page,index,name,address,city,sector,employees_min,employees_max,latitude,longitude,left,top,right,bottom\n";
    for (const auto& page : pages) {
        for (const auto& r : page.records) {
            out << r.page << ',' << r.index << ',' << text::csv_escape(r.name) << ',' << text::csv_escape(r.address)
                << ',' << text::csv_escape(r.city) << ',' << text::csv_escape(r.sector) << ',' << r.employees_min
                << ',' << r.employees_max << ','
                << (r.location ? text::format_fixed(r.location->lat, 6) : "") << ','
                << (r.location ? text::format_fixed(r.location->lon, 6) : "") << ',' << r.bbox.left << ','
                << r.bbox.top << ',' << r.bbox.right << ',' << r.bbox.bottom << '\n';
        }
    }
}

std::vector<TruthRecord> read_truth(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<TruthRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || line.empty()) continue;
        const auto f = text::csv_split(line);
        if (f.size() != 14) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 14 fields");
        try {
            TruthRecord r;
            r.page = std::stoi(f[0]);
            r.index = std::stoi(f[1]);
            r.name = f[2];
            r.address = f[3];
            r.city = f[4];
            r.sector = f[5];
            r.employees_min = std::stoi(f[6]);
            r.employees_max = std::stoi(f[7]);
            if (!f[8].empty() && !f[9].empty()) r.location = LatLon{std::stod(f[8]), std::stod(f[9])};
            r.bbox = BBox{std::stoi(f[10]), std::stoi(f[11]), std::stoi(f[12]), std::stoi(f[13])};
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    return out;
}

} // namespace regmine::synth
