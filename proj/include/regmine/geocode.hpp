#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "regmine/records.hpp"

namespace regmine {

struct LatLon {
    double lat = 0;
    double lon = 0;
    bool operator==(const LatLon&) const = default;
};

struct GeoBounds {
    double min_lat = 0;
    double min_lon = 0;
    double max_lat = 0;
    double max_lon = 0;

    bool contains(double lat, double lon) const
    {
        return lat >= min_lat && lat <= max_lat && lon >= min_lon && lon <= max_lon;
    }
};

/// Canonical city names and street coordinates for one state.
///
/// File format, one row per line, `#` comments:
///
///     city;street;lat;lon        street row
///     city;;lat;lon              city centroid row
///     @bounds;min_lat;min_lon;max_lat;max_lon
///
/// Names are matched case-insensitively with whitespace collapsed. A city
/// without a centroid row uses the mean of its streets.
class Gazetteer {
public:
    void add_city(std::string_view city, std::optional<LatLon> centroid = std::nullopt);
    void add_street(std::string_view city, std::string_view street, LatLon where);
    bool remove_street(std::string_view city, std::string_view street);

    static Gazetteer load(const std::filesystem::path& path);
    static Gazetteer parse(std::string_view contents, const std::string& origin = "<gazetteer>");
    std::string serialize() const;
    void save(const std::filesystem::path& path) const;

    /// Canonical names, sorted.
    std::vector<std::string> cities() const;
    bool empty() const { return cities_.empty(); }
    std::optional<std::string> canonical_city(std::string_view name) const;
    std::optional<LatLon> city_centroid(std::string_view city) const;
    /// `street` is compared after normalize_street.
    std::optional<LatLon> street(std::string_view city, std::string_view street) const;
    /// (street, coordinates) pairs of a city, sorted by street.
    std::vector<std::pair<std::string, LatLon>> streets(std::string_view city) const;
    std::size_t street_count() const;

    std::optional<GeoBounds> bounds;

    /// Throws FormatError when a coordinate falls outside `bounds`.
    void check_bounds() const;

private:
    struct CityEntry {
        std::string canonical;
        std::optional<LatLon> centroid;
        std::map<std::string, LatLon> streets;  // keyed by normalized street
    };
    std::map<std::string, CityEntry> cities_;  // keyed by folded name
};

/// Edit distance with unit insert, delete and substitute costs, over bytes.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - d / max(|a|, |b|) after case folding and whitespace normalization;
/// 1.0 for two empty strings.
double match_ratio(std::string_view a, std::string_view b);

/// Best-matching canonical city when its ratio is at least `min_ratio`; ties
/// go to the lexicographically smaller name.
std::optional<std::string> match_city(std::string_view raw, const Gazetteer& gazetteer, double min_ratio);

/// Upper-cased street with periods, commas and leading house numbers removed.
std::string normalize_street(std::string_view address);

bool is_po_box(std::string_view address);

struct GeoResult {
    double latitude = 0;
    double longitude = 0;
    double confidence = 0;  // [0, 1]
};

struct GeoRecord {
    ParsedRecord record;
    std::optional<std::string> city_matched;
    std::optional<GeoResult> geo;
};

struct GeocodeQuery {
    std::string address;
    std::string city;
};

/// Address resolution service. `geocode` returns nullopt for a legitimate
/// miss and throws BackendUnavailable when the service cannot answer.
class Geocoder {
public:
    virtual ~Geocoder() = default;
    virtual std::string name() const = 0;
    /// Upper bound on concurrent geocode calls the backend tolerates.
    virtual int max_in_flight() const { return 1; }
    virtual std::optional<GeoResult> geocode(const GeocodeQuery& query) const = 0;
};

/// Offline lookups: street hit 0.9, city centroid fallback 0.5, P.O. boxes
/// and unknown cities miss.
class FileGeocoder final : public Geocoder {
public:
    static constexpr double kStreetConfidence = 0.9;
    static constexpr double kCentroidConfidence = 0.5;

    explicit FileGeocoder(Gazetteer gazetteer) : gazetteer_(std::move(gazetteer)) {}
    std::string name() const override { return "file"; }
    int max_in_flight() const override { return 64; }
    std::optional<GeoResult> geocode(const GeocodeQuery& query) const override;

    const Gazetteer& gazetteer() const { return gazetteer_; }

private:
    Gazetteer gazetteer_;
};

struct HttpGeocoderConfig {
    std::string endpoint;         // e.g. http://host:port/arcgis/rest/services/X/GeocodeServer/findAddressCandidates
    std::string api_key_env;      // environment variable holding a token, may be empty
    double timeout_seconds = 10;
    double score_scale = 100;     // remote score that maps to confidence 1.0
    std::string region = "RI";    // appended to the single-line address
    int max_in_flight = 4;
};

/// Client for an ArcGIS-style findAddressCandidates endpoint
/// (`SingleLine`, `f=json`; response `candidates[].location.{x,y}` and
/// `candidates[].score`). Only plain http:// endpoints are supported.
class HttpGeocoder final : public Geocoder {
public:
    explicit HttpGeocoder(HttpGeocoderConfig config);
    std::string name() const override { return "http"; }
    int max_in_flight() const override { return config_.max_in_flight; }
    std::optional<GeoResult> geocode(const GeocodeQuery& query) const override;

private:
    HttpGeocoderConfig config_;
    std::string base_;  // scheme://host:port
    std::string path_;
};

/// Memoizes lookups per (city, normalized street) and caps concurrent calls
/// into the wrapped backend at its max_in_flight.
class CachingGeocoder final : public Geocoder {
public:
    explicit CachingGeocoder(std::shared_ptr<const Geocoder> inner);
    std::string name() const override { return inner_->name(); }
    int max_in_flight() const override { return inner_->max_in_flight(); }
    std::optional<GeoResult> geocode(const GeocodeQuery& query) const override;

    std::size_t backend_calls() const;

private:
    std::shared_ptr<const Geocoder> inner_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<std::string, std::string>, std::optional<GeoResult>> cache_;
    mutable std::counting_semaphore<1024> in_flight_;
    mutable std::size_t calls_ = 0;
};

/// Uses the matched city when present, otherwise the raw heading city.
std::optional<GeoResult> geocode_address(const ParsedRecord& record, const std::optional<std::string>& city_matched,
                                         const Geocoder& backend);

/// Records with a result at or above `min_conf`, in input order.
std::vector<GeoRecord> filter_confident(const std::vector<GeoRecord>& records, double min_conf);

GeoBounds rhode_island_bounds();

/// The 39 Rhode Island municipalities with approximate centroids, plus a
/// fixed synthetic street list per city for offline tests.
Gazetteer rhode_island_gazetteer();

} // namespace regmine
