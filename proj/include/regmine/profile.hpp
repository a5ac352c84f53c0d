#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "regmine/geocode.hpp"
#include "regmine/layout.hpp"
#include "regmine/ocr.hpp"
#include "regmine/raster.hpp"
#include "regmine/records.hpp"

namespace regmine {

/// Per-registry configuration.
///
/// Profile files hold one `key = value` pair per line; `#` starts a comment
/// and unknown keys are errors. Relative paths are resolved against the
/// directory of the profile file. See README.md for the key list.
struct Profile {
    int year = 0;
    MergeConfig merge;
    std::size_t columns = 2;
    ClassifyOptions classify;
    KMeansOptions kmeans;
    int indent_px = 0;  // 0: 5% of the nominal column width
    int min_rows = 2;
    std::int64_t min_block_area = 0;  // smaller components are discarded before layout

    std::string grammar = "default";  // or a grammar file path

    std::string ocr_backend = "mock";  // mock | tesseract
    SubprocessOcrConfig tesseract;

    std::string geocoder = "file";  // file | http | none
    std::string gazetteer = "builtin:rhode-island";  // or a gazetteer file path
    HttpGeocoderConfig http;

    double min_ratio = 0.8;
    double min_conf = 0.75;

    /// Throws std::invalid_argument.
    void validate() const;

    /// Indentation threshold for a page of the given width.
    int indent_for(int page_width) const;

    static Profile load(const std::filesystem::path& path);
    /// `base_dir` anchors relative paths. Throws FormatError.
    static Profile parse(std::string_view contents, const std::filesystem::path& base_dir,
                         const std::string& origin = "<profile>");
    std::string serialize() const;
    void save(const std::filesystem::path& path) const;
};

/// The collaborators a profile selects, built once and shared by every page.
struct Backends {
    std::shared_ptr<const OcrBackend> ocr;
    std::shared_ptr<const Gazetteer> gazetteer;  // city matching; may be empty
    std::shared_ptr<const Geocoder> geocoder;    // null when geocoding is off
    std::shared_ptr<const RecordGrammar> grammar;
};

/// Loads the grammar and gazetteer and instantiates the backends. Geocoders
/// are wrapped in a CachingGeocoder. Throws FormatError for bad files and
/// std::invalid_argument for unknown backend names.
Backends make_backends(const Profile& profile);

} // namespace regmine
