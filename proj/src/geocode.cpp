#include "regmine/geocode.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "regmine/error.hpp"
#include "regmine/rng.hpp"
#include "regmine/text.hpp"

namespace regmine {

namespace {

std::string fold(std::string_view s)
{
    return text::to_upper(text::normalize_whitespace(s));
}

double parse_degrees(const std::string& field, const std::string& where)
{
    const std::string t = text::trim(field);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw FormatError(where + ": bad coordinate '" + field + "'");
    }
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// Gazetteer

void Gazetteer::add_city(std::string_view city, std::optional<LatLon> centroid)
{
    const std::string key = fold(city);
    if (key.empty()) throw FormatError("empty city name");
    auto [it, inserted] = cities_.try_emplace(key);
    if (inserted) it->second.canonical = key;
    if (centroid) it->second.centroid = centroid;
}

void Gazetteer::add_street(std::string_view city, std::string_view street, LatLon where)
{
    const std::string s = normalize_street(street);
    if (s.empty()) throw FormatError("empty street name for " + std::string(city));
    add_city(city);
    cities_[fold(city)].streets[s] = where;
}

bool Gazetteer::remove_street(std::string_view city, std::string_view street)
{
    auto it = cities_.find(fold(city));
    if (it == cities_.end()) return false;
    return it->second.streets.erase(normalize_street(street)) > 0;
}

Gazetteer Gazetteer::parse(std::string_view contents, const std::string& origin)
{
    Gazetteer gaz;
    int lineno = 0;
    for (const std::string& raw : text::split(contents, '\n')) {
        ++lineno;
        const std::string line = text::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        const auto f = text::split(line, ';');
        if (f[0] == "@bounds") {
            if (f.size() != 5) throw FormatError(where + ": @bounds needs 4 values");
            gaz.bounds = GeoBounds{parse_degrees(f[1], where), parse_degrees(f[2], where),
                                   parse_degrees(f[3], where), parse_degrees(f[4], where)};
            continue;
        }
        if (f.size() != 4) throw FormatError(where + ": expected city;street;lat;lon");
        if (text::trim(f[0]).empty()) throw FormatError(where + ": empty city");
        const LatLon at{parse_degrees(f[2], where), parse_degrees(f[3], where)};
        if (text::trim(f[1]).empty()) {
            gaz.add_city(f[0], at);
        } else {
            gaz.add_street(f[0], f[1], at);
        }
    }
    gaz.check_bounds();
    return gaz;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open gazetteer " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string Gazetteer::serialize() const
{
    std::string out = "# city;street;lat;lon (empty street = city centroid)\n";
    if (bounds) {
        out += "@bounds;" + text::format_fixed(bounds->min_lat, 6) + ";" + text::format_fixed(bounds->min_lon, 6) +
               ";" + text::format_fixed(bounds->max_lat, 6) + ";" + text::format_fixed(bounds->max_lon, 6) + "\n";
    }
    auto row = [&](const std::string& city, const std::string& street, LatLon p) {
        out += city + ";" + street + ";" + text::format_fixed(p.lat, 6) + ";" + text::format_fixed(p.lon, 6) + "\n";
    };
    for (const auto& [key, entry] : cities_) {
        if (entry.centroid) row(entry.canonical, "", *entry.centroid);
        for (const auto& [street, p] : entry.streets) row(entry.canonical, street, p);
    }
    return out;
}

void Gazetteer::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << serialize();
}

std::vector<std::string> Gazetteer::cities() const
{
    std::vector<std::string> out;
    out.reserve(cities_.size());
    for (const auto& [key, entry] : cities_) out.push_back(entry.canonical);
    return out;
}

std::optional<std::string> Gazetteer::canonical_city(std::string_view name) const
{
    auto it = cities_.find(fold(name));
    if (it == cities_.end()) return std::nullopt;
    return it->second.canonical;
}

std::optional<LatLon> Gazetteer::city_centroid(std::string_view city) const
{
    auto it = cities_.find(fold(city));
    if (it == cities_.end()) return std::nullopt;
    const CityEntry& e = it->second;
    if (e.centroid) return e.centroid;
    if (e.streets.empty()) return std::nullopt;
    LatLon mean;
    for (const auto& [s, p] : e.streets) {
        mean.lat += p.lat;
        mean.lon += p.lon;
    }
    mean.lat /= static_cast<double>(e.streets.size());
    mean.lon /= static_cast<double>(e.streets.size());
    return mean;
}

std::optional<LatLon> Gazetteer::street(std::string_view city, std::string_view street) const
{
    auto it = cities_.find(fold(city));
    if (it == cities_.end()) return std::nullopt;
    auto s = it->second.streets.find(normalize_street(street));
    if (s == it->second.streets.end()) return std::nullopt;
    return s->second;
}

std::vector<std::pair<std::string, LatLon>> Gazetteer::streets(std::string_view city) const
{
    std::vector<std::pair<std::string, LatLon>> out;
    auto it = cities_.find(fold(city));
    if (it == cities_.end()) return out;
    for (const auto& kv : it->second.streets) out.push_back(kv);
    return out;
}

std::size_t Gazetteer::street_count() const
{
    std::size_t n = 0;
    for (const auto& [key, e] : cities_) n += e.streets.size();
    return n;
}

void Gazetteer::check_bounds() const
{
    if (!bounds) return;
    auto check = [&](const std::string& what, LatLon p) {
        if (!bounds->contains(p.lat, p.lon)) {
            throw FormatError(what + " (" + text::format_fixed(p.lat, 6) + ", " + text::format_fixed(p.lon, 6) +
                              ") lies outside the gazetteer bounds");
        }
    };
    for (const auto& [key, e] : cities_) {
        if (e.centroid) check(e.canonical, *e.centroid);
        for (const auto& [s, p] : e.streets) check(e.canonical + " / " + s, p);
    }
}

// ---------------------------------------------------------------------------
// String matching

std::size_t levenshtein(std::string_view a, std::string_view b)
{
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double match_ratio(std::string_view a, std::string_view b)
{
    const std::string fa = fold(a);
    const std::string fb = fold(b);
    const std::size_t longest = std::max(fa.size(), fb.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(fa, fb)) / static_cast<double>(longest);
}

std::optional<std::string> match_city(std::string_view raw, const Gazetteer& gazetteer, double min_ratio)
{
    if (fold(raw).empty()) return std::nullopt;
    std::optional<std::string> best;
    double best_ratio = -1;
    for (const std::string& city : gazetteer.cities()) {  // sorted, so the first of equals wins
        const double r = match_ratio(raw, city);
        if (r > best_ratio) {
            best_ratio = r;
            best = city;
        }
    }
    if (best && best_ratio >= min_ratio) return best;
    return std::nullopt;
}

std::string normalize_street(std::string_view address)
{
    std::string s;
    for (char c : text::to_upper(address)) {
        if (c == '.') continue;
        s.push_back(c == ',' ? ' ' : c);
    }
    static const std::regex house_number(R"(^(#?[0-9]+[A-Z]?(-[0-9]+[A-Z]?)?|[0-9]+/[0-9]+|NO|#)$)");
    std::vector<std::string> tokens = text::split(text::normalize_whitespace(s), ' ');
    std::size_t first = 0;
    while (first < tokens.size() && std::regex_match(tokens[first], house_number)) ++first;
    tokens.erase(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(first));
    return text::join(tokens, " ");
}

bool is_po_box(std::string_view address)
{
    std::string squashed;
    for (char c : text::to_upper(address)) {
        if (c != '.' && c != ' ') squashed.push_back(c);
    }
    return squashed.rfind("POBOX", 0) == 0 || squashed.rfind("POSTOFFICEBOX", 0) == 0 ||
           (squashed.rfind("BOX", 0) == 0 && squashed.size() > 3 && std::isdigit(static_cast<unsigned char>(squashed[3])));
}

// ---------------------------------------------------------------------------
// Backends

std::optional<GeoResult> FileGeocoder::geocode(const GeocodeQuery& query) const
{
    if (!gazetteer_.canonical_city(query.city)) return std::nullopt;
    if (is_po_box(query.address)) return std::nullopt;
    const std::string street = normalize_street(query.address);
    if (street.empty()) return std::nullopt;
    if (auto p = gazetteer_.street(query.city, street)) return GeoResult{p->lat, p->lon, kStreetConfidence};
    if (auto c = gazetteer_.city_centroid(query.city)) return GeoResult{c->lat, c->lon, kCentroidConfidence};
    return std::nullopt;
}

HttpGeocoder::HttpGeocoder(HttpGeocoderConfig config) : config_(std::move(config))
{
    const std::string prefix = "http://";
    if (config_.endpoint.rfind(prefix, 0) != 0) {
        throw Error("http geocoder endpoint must start with http:// (got '" + config_.endpoint + "')");
    }
    const auto slash = config_.endpoint.find('/', prefix.size());
    base_ = config_.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);
    if (config_.score_scale <= 0) throw Error("score_scale must be positive");
    if (config_.max_in_flight < 1) config_.max_in_flight = 1;
}

std::optional<GeoResult> HttpGeocoder::geocode(const GeocodeQuery& query) const
{
    httplib::Client client(base_);
    const auto timeout = std::chrono::milliseconds(static_cast<long>(config_.timeout_seconds * 1000));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);

    std::string single = query.address;
    if (!query.city.empty()) single += ", " + query.city;
    if (!config_.region.empty()) single += ", " + config_.region;
    httplib::Params params{{"SingleLine", single}, {"f", "json"}, {"maxLocations", "1"}, {"outFields", "Score"}};
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) params.emplace("token", key);
    }

    auto res = client.Get(path_, params, httplib::Headers{});
    if (!res) throw BackendUnavailable("geocoder request to " + base_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw BackendUnavailable("geocoder returned HTTP " + std::to_string(res->status));
    }
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailable(std::string("geocoder sent malformed JSON: ") + e.what());
    }
    if (body.contains("error")) throw BackendUnavailable("geocoder error: " + body["error"].dump());
    const auto it = body.find("candidates");
    if (it == body.end() || !it->is_array() || it->empty()) return std::nullopt;
    try {
        const auto& best = (*it)[0];
        GeoResult r;
        r.longitude = best.at("location").at("x").get<double>();
        r.latitude = best.at("location").at("y").get<double>();
        r.confidence = std::clamp(best.value("score", 0.0) / config_.score_scale, 0.0, 1.0);
        if (!std::isfinite(r.latitude) || !std::isfinite(r.longitude)) return std::nullopt;
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailable(std::string("geocoder candidate is malformed: ") + e.what());
    }
}

CachingGeocoder::CachingGeocoder(std::shared_ptr<const Geocoder> inner)
    : inner_(std::move(inner)), in_flight_(std::clamp(inner_->max_in_flight(), 1, 1024))
{
}

std::optional<GeoResult> CachingGeocoder::geocode(const GeocodeQuery& query) const
{
    auto key = std::make_pair(fold(query.city), is_po_box(query.address) ? std::string("#PO BOX")
                                                                         : normalize_street(query.address));
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    in_flight_.acquire();
    std::optional<GeoResult> result;
    try {
        result = inner_->geocode(query);
    } catch (...) {
        in_flight_.release();
        throw;
    }
    in_flight_.release();
    std::lock_guard lock(mutex_);
    ++calls_;
    cache_.emplace(std::move(key), result);
    return result;
}

std::size_t CachingGeocoder::backend_calls() const
{
    std::lock_guard lock(mutex_);
    return calls_;
}

std::optional<GeoResult> geocode_address(const ParsedRecord& record, const std::optional<std::string>& city_matched,
                                         const Geocoder& backend)
{
    GeocodeQuery q{record.address, city_matched.value_or(record.city_raw)};
    return backend.geocode(q);
}

std::vector<GeoRecord> filter_confident(const std::vector<GeoRecord>& records, double min_conf)
{
    std::vector<GeoRecord> out;
    for (const GeoRecord& r : records) {
        if (r.geo && r.geo->confidence >= min_conf) out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Built-in Rhode Island data

GeoBounds rhode_island_bounds()
{
    return GeoBounds{41.0, -72.0, 42.1, -71.0};
}

namespace {

struct Municipality {
    const char* name;
    double lat;
    double lon;
};

constexpr Municipality kRhodeIsland[] = {
    {"BARRINGTON", 41.7407, -71.3087},       {"BRISTOL", 41.6771, -71.2662},
    {"BURRILLVILLE", 41.9648, -71.6990},     {"CENTRAL FALLS", 41.8901, -71.3923},
    {"CHARLESTOWN", 41.3829, -71.6420},      {"COVENTRY", 41.6840, -71.6620},
    {"CRANSTON", 41.7798, -71.4373},         {"CUMBERLAND", 41.9668, -71.4328},
    {"EAST GREENWICH", 41.6604, -71.4559},   {"EAST PROVIDENCE", 41.8137, -71.3701},
    {"EXETER", 41.5776, -71.5373},           {"FOSTER", 41.8537, -71.7578},
    {"GLOCESTER", 41.8929, -71.6881},        {"HOPKINTON", 41.4610, -71.7778},
    {"JAMESTOWN", 41.4970, -71.3672},        {"JOHNSTON", 41.8218, -71.5064},
    {"LINCOLN", 41.9211, -71.4350},          {"LITTLE COMPTON", 41.5101, -71.1712},
    {"MIDDLETOWN", 41.5457, -71.2912},       {"NARRAGANSETT", 41.4501, -71.4495},
    {"NEW SHOREHAM", 41.1723, -71.5578},     {"NEWPORT", 41.4901, -71.3128},
    {"NORTH KINGSTOWN", 41.5501, -71.4662},  {"NORTH PROVIDENCE", 41.8501, -71.4662},
    {"NORTH SMITHFIELD", 41.9668, -71.5495}, {"PAWTUCKET", 41.8787, -71.3826},
    {"PORTSMOUTH", 41.6023, -71.2504},       {"PROVIDENCE", 41.8240, -71.4128},
    {"RICHMOND", 41.5060, -71.6667},         {"SCITUATE", 41.7926, -71.6201},
    {"SMITHFIELD", 41.9220, -71.5495},       {"SOUTH KINGSTOWN", 41.4473, -71.5245},
    {"TIVERTON", 41.6259, -71.2134},         {"WARREN", 41.7304, -71.2825},
    {"WARWICK", 41.7001, -71.4162},          {"WEST GREENWICH", 41.6304, -71.6634},
    {"WEST WARWICK", 41.6968, -71.5217},     {"WESTERLY", 41.3776, -71.8273},
    {"WOONSOCKET", 42.0029, -71.5148},
};

constexpr const char* kStreetNames[] = {
    "MAIN ST",       "PINE ST",     "ELM ST",        "BROAD ST",      "HIGH ST",      "WATER ST",
    "MILL ST",       "CHURCH ST",   "SCHOOL ST",     "UNION AVE",     "PROSPECT ST",  "WASHINGTON ST",
    "PLEASANT ST",   "SPRING ST",   "CENTRAL AVE",   "MAPLE AVE",     "NORTH MAIN ST", "SOUTH MAIN ST",
    "RIVER RD",      "DEXTER ST",   "EDDY ST",       "WESTMINSTER ST", "WEYBOSSET ST", "COTTAGE ST",
    "BRIDGE ST",     "FRONT ST",    "GROVE ST",      "CHESTNUT ST",   "BLACKSTONE ST", "JEFFERSON ST",
};

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

Gazetteer rhode_island_gazetteer()
{
    constexpr std::size_t kStreetsPerCity = 12;
    Gazetteer gaz;
    gaz.bounds = rhode_island_bounds();
    for (const Municipality& m : kRhodeIsland) {
        gaz.add_city(m.name, LatLon{m.lat, m.lon});
        Rng rng(fnv1a(m.name));
        std::vector<std::string> names(std::begin(kStreetNames), std::end(kStreetNames));
        for (std::size_t i = 0; i < kStreetsPerCity; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(names.size() - i));
            std::swap(names[i], names[j]);
            const double dlat = (rng.uniform() - 0.5) * 0.03;
            const double dlon = (rng.uniform() - 0.5) * 0.03;
            gaz.add_street(m.name, names[i], LatLon{m.lat + dlat, m.lon + dlon});
        }
    }
    gaz.check_bounds();
    return gaz;
}

} // namespace regmine
