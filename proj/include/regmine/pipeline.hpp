#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "regmine/geocode.hpp"
#include "regmine/image_io.hpp"
#include "regmine/layout.hpp"
#include "regmine/profile.hpp"
#include "regmine/records.hpp"

namespace regmine {

struct PageStats {
    int page = 0;
    std::size_t components = 0;
    std::size_t specks = 0;  // below min_block_area
    std::size_t boxes = 0;   // after indentation splitting
    std::size_t column_blocks = 0;
    std::size_t centered_blocks = 0;
    std::size_t rejected_blocks = 0;
    std::size_t records = 0;
    std::size_t headings = 0;
    std::size_t noise = 0;
    std::size_t ocr_failures = 0;  // included in noise
    std::size_t geocoded_confident = 0;
};

struct PageResult {
    std::vector<GeoRecord> records;
    std::optional<Heading> carry;
    PageStats stats;
    PageBlocks blocks;
};

struct RegistryResult {
    int year = 0;
    std::vector<GeoRecord> records;
    std::vector<PageStats> pages;
    std::size_t identified = 0;
    std::size_t geocoded_confident = 0;
};

/// Page and registry processing for one profile. Thread-safe once built.
class Pipeline {
public:
    explicit Pipeline(Profile profile);
    Pipeline(Profile profile, Backends backends);

    const Profile& profile() const { return profile_; }
    const Backends& backends() const { return backends_; }

    /// Layout analysis, recognition, parsing, heading propagation, city
    /// matching and geocoding of one page. BackendUnavailable propagates;
    /// an OcrFailure turns that block into Noise.
    PageResult process_page(const GrayRaster& img, int page, std::optional<Heading> carry) const;

    /// Pages in print order, numbered from 1, carrying the heading across.
    RegistryResult process_registry(const std::vector<GrayRaster>& pages) const;
    /// Same, reading each image when it is needed.
    RegistryResult process_files(const std::vector<std::filesystem::path>& pages) const;

private:
    Profile profile_;
    Backends backends_;
};

/// Page images (PGM or PNG) in `dir`, or in `dir`/pages when that exists,
/// sorted by file name.
std::vector<std::filesystem::path> list_pages(const std::filesystem::path& dir);

struct RegistryJob {
    const Pipeline* pipeline = nullptr;
    std::vector<std::filesystem::path> pages;
};

/// Independent registries in parallel, results in job order. The first
/// exception (in job order) is rethrown after all workers finish.
std::vector<RegistryResult> process_registries(const std::vector<RegistryJob>& jobs);

struct Estimate {
    int year = 0;
    std::size_t sampled_pages = 0;
    double mean_records_per_page = 0;
    std::size_t total_pages = 0;
    std::size_t estimated_records = 0;
};

/// Mean of the hand counts times the page count, rounded half-up in exact
/// integer arithmetic. Throws std::invalid_argument for an empty sample or
/// fewer pages than samples.
Estimate estimate_records(const std::vector<std::size_t>& page_samples, std::size_t total_pages, int year = 0);

/// Marker printed for percentages of a zero estimate.
inline constexpr const char* kUndefinedPercent = "NA";

struct AccuracyRow {
    std::string year;  // "all" for the overall row
    std::size_t identified = 0;
    std::size_t geocoded = 0;
    std::size_t estimated = 0;
    std::string identified_pct;  // one decimal, or kUndefinedPercent
    std::string geocoded_pct;
};

/// One row per year in ascending order, then the overall row. Every result
/// needs exactly one estimate of the same year and vice versa; otherwise
/// throws Error.
std::vector<AccuracyRow> accuracy_report(const std::vector<RegistryResult>& results,
                                         const std::vector<Estimate>& estimates);

std::string percent(std::size_t part, std::size_t whole);
std::string format_accuracy_csv(const std::vector<AccuracyRow>& rows);

struct DensityGrid {
    GeoBounds bounds;
    double cell_deg = 0;
    int rows = 0;  // south to north
    int cols = 0;  // west to east
    std::vector<std::size_t> counts;  // row-major

    std::size_t at(int row, int col) const { return counts[static_cast<std::size_t>(row) * cols + col]; }
    std::size_t total() const;
};

/// Counts confident records (confidence >= min_conf) inside `bounds` per
/// cell of `cell_deg` degrees. Points on the north or east edge land in the
/// last cell. `sector_filter` keeps records whose sector contains it,
/// ignoring case. Throws std::invalid_argument unless cell_deg > 0 and the
/// bounds are non-empty.
DensityGrid density_grid(const std::vector<GeoRecord>& records, double cell_deg, const GeoBounds& bounds,
                         const std::optional<std::string>& sector_filter = std::nullopt, double min_conf = 0.75);

/// `lat,lon,count` rows with cell centers, south-west first.
std::string format_density_csv(const DensityGrid& grid);

/// Fixed column order: year, page, name, address, city_raw, city_matched,
/// sector, employees_min, employees_max, latitude, longitude, confidence.
void write_records_csv(std::ostream& out, const std::vector<RegistryResult>& results);
std::string records_csv(const std::vector<RegistryResult>& results);

/// FeatureCollection of the records with confidence >= min_conf.
std::string records_geojson(const std::vector<RegistryResult>& results, double min_conf);

/// year, page, then every PageStats counter.
std::string page_stats_csv(const std::vector<RegistryResult>& results);

/// Page with column blocks in green, centered blocks in blue and rejected
/// boxes in red.
RgbImage render_overlay(const GrayRaster& img, const PageBlocks& blocks);

} // namespace regmine
