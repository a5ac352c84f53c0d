#include "regmine/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "regmine/contours.hpp"
#include "regmine/error.hpp"
#include "regmine/text.hpp"

namespace fs = std::filesystem;

namespace regmine {

namespace {

struct OcrTask {
    BBox box;
    bool centered = false;
    std::size_t column = 0;
};

// Runs body(i) for i in [0, n), in parallel when allowed. Exceptions are
// collected per index and the lowest-index one is rethrown.
template <typename Body>
void for_each_index(std::size_t n, int threads, Body&& body)
{
    std::vector<std::exception_ptr> errors(n);
    if (threads > 1 && n > 1) {
        const int t = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), n));
#pragma omp parallel for schedule(dynamic) num_threads(t)
        for (std::size_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string optional_int(const std::optional<int>& v)
{
    return v ? std::to_string(*v) : std::string();
}

} // namespace

Pipeline::Pipeline(Profile profile) : Pipeline(profile, make_backends(profile)) {}

Pipeline::Pipeline(Profile profile, Backends backends) : profile_(std::move(profile)), backends_(std::move(backends))
{
    profile_.validate();
    if (!backends_.ocr) throw std::invalid_argument("pipeline needs an OCR backend");
    if (!backends_.grammar) backends_.grammar = std::make_shared<const RecordGrammar>(RecordGrammar::default_grammar());
    if (!backends_.gazetteer) backends_.gazetteer = std::make_shared<const Gazetteer>();
}

PageResult Pipeline::process_page(const GrayRaster& img, int page, std::optional<Heading> carry) const
{
    PageResult result;
    result.carry = carry;
    result.stats.page = page;
    if (img.empty()) return result;

    const BitRaster bits = merge_text_blobs(img, profile_.merge);
    const std::vector<Contour> contours = extract_contours(bits);
    result.stats.components = contours.size();

    const int indent = profile_.indent_for(img.width());
    std::vector<BBox> boxes;
    for (const Contour& c : contours) {
        if (c.area < profile_.min_block_area) {
            ++result.stats.specks;
            continue;
        }
        if (indent >= c.bbox.width()) {
            boxes.push_back(c.bbox);
            continue;
        }
        for (const BBox& b : split_at_indentations(c, bits, indent, profile_.min_rows)) boxes.push_back(b);
    }
    result.stats.boxes = boxes.size();
    if (boxes.empty()) return result;

    ColumnFit fit = fit_columns(boxes, profile_.columns, img.width(), profile_.classify, profile_.kmeans);
    result.blocks = fit.blocks;
    const PageBlocks& pb = result.blocks;
    result.stats.centered_blocks = pb.centered_blocks.size();
    result.stats.rejected_blocks = pb.rejected.size();

    std::vector<OcrTask> tasks;
    for (std::size_t c = 0; c < pb.column_blocks.size(); ++c) {
        for (const BBox& b : pb.column_blocks[c]) tasks.push_back({b, false, c});
    }
    result.stats.column_blocks = tasks.size();
    for (const BBox& b : pb.centered_blocks) tasks.push_back({b, true, 0});

    const OcrBackend& ocr = *backends_.ocr;
    const int ocr_threads = ocr.info().concurrent_safe ? omp_get_max_threads() : 1;
    std::vector<BlockParse> parses(tasks.size(), Noise{});
    std::vector<char> failed(tasks.size(), 0);
    for_each_index(tasks.size(), ocr_threads, [&](std::size_t i) {
        const Provenance prov{profile_.year, page, tasks[i].box};
        try {
            const OcrResult text = ocr.recognize(img, tasks[i].box);
            parses[i] = parse_block(text.lines, *backends_.grammar, prov);
        } catch (const OcrFailure& e) {
            failed[i] = 1;
            parses[i] = Noise{e.what()};
        }
    });

    std::vector<StreamItem> stream;
    std::vector<Heading> centered;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        result.stats.ocr_failures += static_cast<std::size_t>(failed[i]);
        if (tasks[i].centered) {
            // only headings are meaningful outside the columns
            if (const Heading* h = std::get_if<Heading>(&parses[i])) {
                centered.push_back(*h);
                ++result.stats.headings;
            } else {
                ++result.stats.noise;
            }
            continue;
        }
        if (std::holds_alternative<Heading>(parses[i])) ++result.stats.headings;
        if (std::holds_alternative<Noise>(parses[i])) ++result.stats.noise;
        stream.push_back({std::move(parses[i]), tasks[i].column, tasks[i].box.top});
    }

    Propagation prop = propagate_headings(stream, std::move(centered), carry);
    result.carry = prop.carry;
    result.stats.records = prop.records.size();

    result.records.resize(prop.records.size());
    const Geocoder* geocoder = backends_.geocoder.get();
    const int geo_threads = geocoder ? std::min(geocoder->max_in_flight(), omp_get_max_threads()) : 1;
    for_each_index(prop.records.size(), geo_threads, [&](std::size_t i) {
        GeoRecord& out = result.records[i];
        out.record = std::move(prop.records[i]);
        out.city_matched = match_city(out.record.city_raw, *backends_.gazetteer, profile_.min_ratio);
        if (geocoder) out.geo = geocode_address(out.record, out.city_matched, *geocoder);
    });
    result.stats.geocoded_confident = filter_confident(result.records, profile_.min_conf).size();
    return result;
}

RegistryResult Pipeline::process_registry(const std::vector<GrayRaster>& pages) const
{
    RegistryResult reg;
    reg.year = profile_.year;
    std::optional<Heading> carry;
    for (std::size_t i = 0; i < pages.size(); ++i) {
        PageResult r = process_page(pages[i], static_cast<int>(i) + 1, carry);
        carry = r.carry;
        reg.pages.push_back(r.stats);
        for (auto& rec : r.records) reg.records.push_back(std::move(rec));
    }
    reg.identified = reg.records.size();
    reg.geocoded_confident = filter_confident(reg.records, profile_.min_conf).size();
    return reg;
}

RegistryResult Pipeline::process_files(const std::vector<fs::path>& pages) const
{
    RegistryResult reg;
    reg.year = profile_.year;
    std::optional<Heading> carry;
    for (std::size_t i = 0; i < pages.size(); ++i) {
        PageResult r = process_page(read_image(pages[i]), static_cast<int>(i) + 1, carry);
        carry = r.carry;
        reg.pages.push_back(r.stats);
        for (auto& rec : r.records) reg.records.push_back(std::move(rec));
    }
    reg.identified = reg.records.size();
    reg.geocoded_confident = filter_confident(reg.records, profile_.min_conf).size();
    return reg;
}

std::vector<fs::path> list_pages(const fs::path& dir)
{
    fs::path root = dir;
    if (fs::is_directory(dir / "pages")) root = dir / "pages";
    if (!fs::is_directory(root)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_regular_file() && is_page_image(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<RegistryResult> process_registries(const std::vector<RegistryJob>& jobs)
{
    std::vector<RegistryResult> out(jobs.size());
    for_each_index(jobs.size(), omp_get_max_threads(), [&](std::size_t i) {
        if (!jobs[i].pipeline) throw std::invalid_argument("registry job without a pipeline");
        out[i] = jobs[i].pipeline->process_files(jobs[i].pages);
    });
    return out;
}

Estimate estimate_records(const std::vector<std::size_t>& page_samples, std::size_t total_pages, int year)
{
    if (page_samples.empty()) throw std::invalid_argument("estimate needs at least one sampled page");
    if (total_pages < page_samples.size()) throw std::invalid_argument("fewer pages than samples");
    std::size_t sum = 0;
    for (std::size_t s : page_samples) sum += s;
    const std::size_t n = page_samples.size();
    Estimate e;
    e.year = year;
    e.sampled_pages = n;
    e.mean_records_per_page = static_cast<double>(sum) / static_cast<double>(n);
    e.total_pages = total_pages;
    e.estimated_records = (2 * sum * total_pages + n) / (2 * n);
    return e;
}

std::string percent(std::size_t part, std::size_t whole)
{
    if (whole == 0) return kUndefinedPercent;
    return text::format_fixed(100.0 * static_cast<double>(part) / static_cast<double>(whole), 1);
}

std::vector<AccuracyRow> accuracy_report(const std::vector<RegistryResult>& results,
                                         const std::vector<Estimate>& estimates)
{
    std::map<int, const Estimate*> by_year;
    for (const Estimate& e : estimates) {
        if (!by_year.emplace(e.year, &e).second) {
            throw Error("more than one estimate for year " + std::to_string(e.year));
        }
    }
    std::map<int, const RegistryResult*> result_by_year;
    for (const RegistryResult& r : results) {
        if (!result_by_year.emplace(r.year, &r).second) {
            throw Error("more than one result for year " + std::to_string(r.year));
        }
        if (!by_year.count(r.year)) throw Error("no estimate for year " + std::to_string(r.year));
    }
    for (const auto& [year, e] : by_year) {
        if (!result_by_year.count(year)) throw Error("estimate for year " + std::to_string(year) + " has no result");
    }

    std::vector<AccuracyRow> rows;
    AccuracyRow all{"all", 0, 0, 0, "", ""};
    for (const auto& [year, r] : result_by_year) {
        AccuracyRow row;
        row.year = std::to_string(year);
        row.identified = r->identified;
        row.geocoded = r->geocoded_confident;
        row.estimated = by_year.at(year)->estimated_records;
        row.identified_pct = percent(row.identified, row.estimated);
        row.geocoded_pct = percent(row.geocoded, row.estimated);
        all.identified += row.identified;
        all.geocoded += row.geocoded;
        all.estimated += row.estimated;
        rows.push_back(row);
    }
    all.identified_pct = percent(all.identified, all.estimated);
    all.geocoded_pct = percent(all.geocoded, all.estimated);
    rows.push_back(all);
    return rows;
}

std::string format_accuracy_csv(const std::vector<AccuracyRow>& rows)
{
    std::ostringstream o;
    o << "year,identified,geocoded,estimated,identified_pct,geocoded_pct\n";
    for (const auto& r : rows) {
        o << r.year << ',' << r.identified << ',' << r.geocoded << ',' << r.estimated << ',' << r.identified_pct << ','
          << r.geocoded_pct << '\n';
    }
    return o.str();
}

std::size_t DensityGrid::total() const
{
    std::size_t t = 0;
    for (std::size_t c : counts) t += c;
    return t;
}

DensityGrid density_grid(const std::vector<GeoRecord>& records, double cell_deg, const GeoBounds& bounds,
                         const std::optional<std::string>& sector_filter, double min_conf)
{
    if (!(cell_deg > 0)) throw std::invalid_argument("cell_deg must be > 0");
    if (!(bounds.max_lat > bounds.min_lat) || !(bounds.max_lon > bounds.min_lon)) {
        throw std::invalid_argument("density bounds are empty");
    }
    DensityGrid g;
    g.bounds = bounds;
    g.cell_deg = cell_deg;
    g.rows = std::max(1, static_cast<int>(std::ceil((bounds.max_lat - bounds.min_lat) / cell_deg - 1e-9)));
    g.cols = std::max(1, static_cast<int>(std::ceil((bounds.max_lon - bounds.min_lon) / cell_deg - 1e-9)));
    g.counts.assign(static_cast<std::size_t>(g.rows) * g.cols, 0);

    const std::string needle = sector_filter ? text::to_upper(*sector_filter) : std::string();
    for (const GeoRecord& r : records) {
        if (!r.geo || r.geo->confidence < min_conf) continue;
        if (!bounds.contains(r.geo->latitude, r.geo->longitude)) continue;
        if (sector_filter && text::to_upper(r.record.sector).find(needle) == std::string::npos) continue;
        int row = static_cast<int>(std::floor((r.geo->latitude - bounds.min_lat) / cell_deg));
        int col = static_cast<int>(std::floor((r.geo->longitude - bounds.min_lon) / cell_deg));
        row = std::clamp(row, 0, g.rows - 1);
        col = std::clamp(col, 0, g.cols - 1);
        ++g.counts[static_cast<std::size_t>(row) * g.cols + col];
    }
    return g;
}

std::string format_density_csv(const DensityGrid& grid)
{
    std::ostringstream o;
    o << "lat,lon,count\n";
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            const double lat = grid.bounds.min_lat + (r + 0.5) * grid.cell_deg;
            const double lon = grid.bounds.min_lon + (c + 0.5) * grid.cell_deg;
            o << text::format_fixed(lat, 6) << ',' << text::format_fixed(lon, 6) << ',' << grid.at(r, c) << '\n';
        }
    }
    return o.str();
}

void write_records_csv(std::ostream& out, const std::vector<RegistryResult>& results)
{
    out << "year,page,name,address,city_raw,city_matched,sector,employees_min,employees_max,latitude,longitude,"
           "confidence\n";
    for (const RegistryResult& reg : results) {
        for (const GeoRecord& g : reg.records) {
            const ParsedRecord& r = g.record;
            out << r.provenance.year << ',' << r.provenance.page << ',' << text::csv_escape(r.name) << ','
                << text::csv_escape(r.address) << ',' << text::csv_escape(r.city_raw) << ','
                << text::csv_escape(g.city_matched.value_or("")) << ',' << text::csv_escape(r.sector) << ','
                << optional_int(r.employees_min) << ',' << optional_int(r.employees_max) << ',';
            if (g.geo) {
                out << text::format_fixed(g.geo->latitude, 6) << ',' << text::format_fixed(g.geo->longitude, 6) << ','
                    << text::format_fixed(g.geo->confidence, 4);
            } else {
                out << ",,";
            }
            out << '\n';
        }
    }
}

std::string records_csv(const std::vector<RegistryResult>& results)
{
    std::ostringstream o;
    write_records_csv(o, results);
    return o.str();
}

std::string records_geojson(const std::vector<RegistryResult>& results, double min_conf)
{
    using nlohmann::ordered_json;
    ordered_json features = ordered_json::array();
    for (const RegistryResult& reg : results) {
        for (const GeoRecord& g : filter_confident(reg.records, min_conf)) {
            const ParsedRecord& r = g.record;
            ordered_json props;
            props["year"] = r.provenance.year;
            props["page"] = r.provenance.page;
            props["name"] = r.name;
            props["address"] = r.address;
            props["city_raw"] = r.city_raw;
            props["city_matched"] = g.city_matched ? ordered_json(*g.city_matched) : ordered_json(nullptr);
            props["sector"] = r.sector;
            props["employees_min"] = r.employees_min ? ordered_json(*r.employees_min) : ordered_json(nullptr);
            props["employees_max"] = r.employees_max ? ordered_json(*r.employees_max) : ordered_json(nullptr);
            props["confidence"] = g.geo->confidence;
            ordered_json f;
            f["type"] = "Feature";
            f["geometry"] = {{"type", "Point"}, {"coordinates", {g.geo->longitude, g.geo->latitude}}};
            f["properties"] = std::move(props);
            features.push_back(std::move(f));
        }
    }
    ordered_json doc;
    doc["type"] = "FeatureCollection";
    doc["features"] = std::move(features);
    return doc.dump(2) + "\n";
}

std::string page_stats_csv(const std::vector<RegistryResult>& results)
{
    std::ostringstream o;
    o << "year,page,components,specks,boxes,column_blocks,centered_blocks,rejected_blocks,records,headings,noise,"
         "ocr_failures,geocoded_confident\n";
    for (const RegistryResult& reg : results) {
        for (const PageStats& s : reg.pages) {
            o << reg.year << ',' << s.page << ',' << s.components << ',' << s.specks << ',' << s.boxes << ','
              << s.column_blocks << ',' << s.centered_blocks << ',' << s.rejected_blocks << ',' << s.records << ','
              << s.headings << ',' << s.noise << ',' << s.ocr_failures << ',' << s.geocoded_confident << '\n';
        }
    }
    return o.str();
}

RgbImage render_overlay(const GrayRaster& img, const PageBlocks& blocks)
{
    RgbImage canvas(img);
    for (const auto& column : blocks.column_blocks) draw_boxes(canvas, column, 0, 170, 0);
    draw_boxes(canvas, blocks.centered_blocks, 0, 0, 220);
    draw_boxes(canvas, blocks.rejected, 220, 0, 0);
    return canvas;
}

} // namespace regmine
