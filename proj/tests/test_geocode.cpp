#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "regmine/error.hpp"
#include "regmine/geocode.hpp"
#include "support.hpp"

using namespace regmine;

namespace {

Gazetteer small_gazetteer()
{
    return Gazetteer::parse(
        "# test rows\n"
        "@bounds;41.0;-72.0;42.1;-71.0\n"
        "PAWTUCKET;;41.8787;-71.3826\n"
        "PAWTUCKET;PINE ST;41.8801;-71.3850\n"
        "PAWTUCKET;MAIN ST;41.8760;-71.3800\n"
        "WARREN;;41.7304;-71.2825\n"
        "BRISTOL;HOPE ST;41.6700;-71.2700\n");
}

GeoRecord with_conf(std::optional<double> c)
{
    GeoRecord r;
    r.record.name = "X";
    if (c) r.geo = GeoResult{41.5, -71.5, *c};
    return r;
}

class CountingGeocoder final : public Geocoder {
public:
    std::string name() const override { return "counting"; }
    int max_in_flight() const override { return 2; }
    std::optional<GeoResult> geocode(const GeocodeQuery&) const override
    {
        const int now = ++active_;
        int seen = peak_.load();
        while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --active_;
        ++calls_;
        return GeoResult{41.5, -71.5, 0.9};
    }
    mutable std::atomic<int> active_{0};
    mutable std::atomic<int> peak_{0};
    mutable std::atomic<int> calls_{0};
};

// Minimal findAddressCandidates endpoint on a loopback port.
class FakeArcGis {
public:
    FakeArcGis()
    {
        server_.Get("/arcgis/findAddressCandidates", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            last_single_ = req.get_param_value("SingleLine");
            last_token_ = req.get_param_value("token");
            if (req.get_param_value("f") != "json") {
                res.status = 400;
                return;
            }
            if (last_single_.rfind("404", 0) == 0) {
                res.status = 500;
                return;
            }
            if (last_single_.rfind("NOWHERE", 0) == 0) {
                res.set_content(R"({"candidates": []})", "application/json");
                return;
            }
            if (last_single_.rfind("GARBLED", 0) == 0) {
                res.set_content("{not json", "application/json");
                return;
            }
            res.set_content(R"({"spatialReference": {"wkid": 4326}, "candidates": [)"
                            R"({"address": "12 PINE ST", "location": {"x": -71.385, "y": 41.8801}, "score": 87.5},)"
                            R"({"address": "PINE ST", "location": {"x": -71.0, "y": 41.0}, "score": 40}]})",
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeArcGis()
    {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/arcgis/findAddressCandidates"; }

    std::atomic<int> requests_{0};
    std::string last_single_;
    std::string last_token_;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST_CASE("levenshtein examples")
{
    CHECK(levenshtein("", "ABC") == 3);
    CHECK(levenshtein("PROVIDENCE", "PROVIDENCE") == 0);
    CHECK(levenshtein("PR0VIDENCE", "PROVIDENCE") == 1);
    CHECK(levenshtein("KITTEN", "SITTING") == 3);
}

TEST_CASE("levenshtein matches a full matrix on 500 random pairs")
{
    Rng rng(51);
    for (int trial = 0; trial < 500; ++trial) {
        const std::string a = testing::random_word(rng, 12, trial % 2 ? "AB" : "ABCDEFGH");
        const std::string b = testing::random_word(rng, 12, trial % 2 ? "AB" : "ABCDEFGH");
        REQUIRE(levenshtein(a, b) == testing::levenshtein_matrix(a, b));
    }
}

TEST_CASE("levenshtein is a metric on 200 random triples")
{
    Rng rng(52);
    for (int trial = 0; trial < 200; ++trial) {
        const std::string a = testing::random_word(rng, 10, "ABC");
        const std::string b = testing::random_word(rng, 10, "ABC");
        const std::string c = testing::random_word(rng, 10, "ABC");
        REQUIRE(levenshtein(a, a) == 0);
        REQUIRE((levenshtein(a, b) == 0) == (a == b));
        REQUIRE(levenshtein(a, b) == levenshtein(b, a));
        REQUIRE(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
    }
}

TEST_CASE("match ratio ignores case")
{
    Rng rng(53);
    auto lower = [](std::string s) {
        for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        return s;
    };
    for (int trial = 0; trial < 200; ++trial) {
        const std::string a = testing::random_word(rng, 10, "ABCDE");
        const std::string b = testing::random_word(rng, 10, "ABCDE");
        REQUIRE(match_ratio(lower(a), b) == match_ratio(a, b));
        REQUIRE(match_ratio(a, lower(b)) == match_ratio(a, b));
    }
    CHECK(match_ratio("", "") == 1.0);
    CHECK(match_ratio("PAWTUCKTT", "PAWTUCKET") == doctest::Approx(8.0 / 9.0));
}

TEST_CASE("match_city examples")
{
    const Gazetteer ri = rhode_island_gazetteer();
    CHECK(match_city("PAWTUCKET", ri, 0.8) == "PAWTUCKET");
    CHECK(match_city("pawtucket", ri, 0.8) == "PAWTUCKET");
    CHECK(match_city("PAWTUCKTT", ri, 0.8) == "PAWTUCKET");
    CHECK_FALSE(match_city("XXXXXXX", ri, 0.8));
    CHECK_FALSE(match_city("", ri, 0.0));
    CHECK(match_city("WEST  WARWICK", ri, 0.8) == "WEST WARWICK");
}

TEST_CASE("one substitution never loses a city of six or more letters")
{
    const Gazetteer ri = rhode_island_gazetteer();
    Rng rng(54);
    std::size_t tested = 0;
    for (const std::string& city : ri.cities()) {
        if (city.size() < 6) continue;
        for (std::size_t pos = 0; pos < city.size(); ++pos) {
            for (int k = 0; k < 3; ++k) {
                std::string bad = city;
                char c;
                do {
                    c = static_cast<char>('A' + rng.below(26));
                } while (c == city[pos]);
                bad[pos] = c;
                REQUIRE_MESSAGE(match_city(bad, ri, 0.8) == city, bad);
                ++tested;
            }
        }
    }
    CHECK(tested > 500);
}

TEST_CASE("gazetteer file format")
{
    const Gazetteer g = small_gazetteer();
    CHECK(g.cities() == std::vector<std::string>{"BRISTOL", "PAWTUCKET", "WARREN"});
    CHECK(g.street_count() == 3);
    CHECK(g.street("pawtucket", "12 Pine St.") == LatLon{41.8801, -71.3850});
    CHECK_FALSE(g.street("PAWTUCKET", "ELM ST"));
    CHECK(g.city_centroid("WARREN") == LatLon{41.7304, -71.2825});
    const auto bristol = g.city_centroid("BRISTOL");  // mean of its streets
    REQUIRE(bristol);
    CHECK(bristol->lat == doctest::Approx(41.67));

    const Gazetteer again = Gazetteer::parse(g.serialize());
    CHECK(again.serialize() == g.serialize());
    CHECK(again.cities() == g.cities());

    testing::TempDir dir("gaz");
    g.save(dir.path() / "g.txt");
    CHECK(Gazetteer::load(dir.path() / "g.txt").serialize() == g.serialize());
    CHECK_THROWS_AS(Gazetteer::load(dir.path() / "none.txt"), FormatError);

    CHECK_THROWS_AS(Gazetteer::parse("A;B;41.0\n"), FormatError);
    CHECK_THROWS_AS(Gazetteer::parse(";B;41.0;-71.0\n"), FormatError);
    CHECK_THROWS_AS(Gazetteer::parse("A;B;north;-71.0\n"), FormatError);
    CHECK_THROWS_AS(Gazetteer::parse("@bounds;41;-72;42\n"), FormatError);
    CHECK_THROWS_AS(Gazetteer::parse("@bounds;41;-72;42;-71\nA;;45.0;-71.5\n"), FormatError);

    Gazetteer copy = g;
    CHECK(copy.remove_street("PAWTUCKET", "PINE ST"));
    CHECK_FALSE(copy.remove_street("PAWTUCKET", "PINE ST"));
    CHECK(copy.street_count() == 2);
}

TEST_CASE("built-in gazetteer covers every municipality inside the state box")
{
    const Gazetteer ri = rhode_island_gazetteer();
    CHECK(ri.cities().size() == 39);
    const GeoBounds b = rhode_island_bounds();
    for (const auto& city : ri.cities()) {
        const auto c = ri.city_centroid(city);
        REQUIRE(c);
        REQUIRE(b.contains(c->lat, c->lon));
        REQUIRE(!ri.streets(city).empty());
    }
}

TEST_CASE("street normalization and post office boxes")
{
    CHECK(normalize_street("12 Pine St.") == "PINE ST");
    CHECK(normalize_street("12-14 PINE ST") == "PINE ST");
    CHECK(normalize_street("NO. 5 MAIN ST") == "MAIN ST");
    CHECK(normalize_street("12") == "");
    CHECK(is_po_box("P.O. BOX 141"));
    CHECK(is_po_box("PO BOX 9"));
    CHECK(is_po_box("BOX 12"));
    CHECK_FALSE(is_po_box("BOXWOOD AVE"));
    CHECK_FALSE(is_po_box("12 PINE ST"));
}

TEST_CASE("file geocoder lookups")
{
    const FileGeocoder geo(small_gazetteer());
    ParsedRecord rec;
    rec.address = "12 PINE ST";
    const auto hit = geocode_address(rec, std::string("PAWTUCKET"), geo);
    REQUIRE(hit);
    CHECK(hit->latitude == 41.8801);
    CHECK(hit->longitude == -71.3850);
    CHECK(hit->confidence == 0.9);

    rec.address = "7 ELM ST";
    const auto centroid = geocode_address(rec, std::string("WARREN"), geo);
    REQUIRE(centroid);
    CHECK(centroid->latitude == 41.7304);
    CHECK(centroid->confidence == 0.5);

    rec.address = "P.O. BOX 141";
    CHECK_FALSE(geocode_address(rec, std::string("PAWTUCKET"), geo));

    rec.address = "12 PINE ST";
    CHECK_FALSE(geocode_address(rec, std::string("ATLANTIS"), geo));
    rec.city_raw = "pawtucket";
    CHECK(geocode_address(rec, std::nullopt, geo));
}

TEST_CASE("filter_confident examples")
{
    const std::vector<GeoRecord> rs{with_conf(0.9), with_conf(0.74), with_conf(0.75), with_conf(std::nullopt)};
    const auto kept = filter_confident(rs, 0.75);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].geo->confidence == 0.9);
    CHECK(kept[1].geo->confidence == 0.75);
    CHECK(filter_confident({}, 0.75).empty());
    CHECK(filter_confident(rs, 0.0).size() == 3);
}

TEST_CASE("filter_confident shrinks as the cutoff rises")
{
    Rng rng(55);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<GeoRecord> rs;
        const int n = static_cast<int>(rng.range(0, 30));
        for (int i = 0; i < n; ++i) rs.push_back(with_conf(rng.chance(0.2) ? std::nullopt : std::optional(rng.uniform())));
        std::size_t prev = rs.size() + 1;
        for (double t = 0; t <= 1.0; t += 0.05) {
            const std::size_t k = filter_confident(rs, t).size();
            REQUIRE(k <= prev);
            prev = k;
        }
    }
}

TEST_CASE("caching geocoder calls the backend once per street and city")
{
    auto inner = std::make_shared<CountingGeocoder>();
    const CachingGeocoder cache(inner);
    CHECK(cache.max_in_flight() == 2);
    cache.geocode({"12 PINE ST", "PAWTUCKET"});
    cache.geocode({"14 Pine St.", "pawtucket"});
    cache.geocode({"12 PINE ST", "WARREN"});
    cache.geocode({"P.O. BOX 3", "WARREN"});
    cache.geocode({"PO BOX 4", "WARREN"});
    CHECK(inner->calls_ == 3);
    CHECK(cache.backend_calls() == 3);
}

TEST_CASE("caching geocoder respects the in-flight limit")
{
    auto inner = std::make_shared<CountingGeocoder>();
    const CachingGeocoder cache(inner);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            for (char street = 'A'; street < 'E'; ++street) {
                cache.geocode({std::string(1, street) + " ST " + std::to_string(t), "X"});
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(inner->calls_ == 32);
    CHECK(inner->peak_ <= 2);
}

TEST_CASE("http geocoder against a local endpoint")
{
    FakeArcGis server;
    ::setenv("REGMINE_TEST_GEOCODE_TOKEN", "s3cret", 1);
    HttpGeocoderConfig cfg;
    cfg.endpoint = server.endpoint();
    cfg.api_key_env = "REGMINE_TEST_GEOCODE_TOKEN";
    cfg.timeout_seconds = 5;
    const HttpGeocoder geo(cfg);

    const auto hit = geo.geocode({"12 PINE ST", "PAWTUCKET"});
    REQUIRE(hit);
    CHECK(hit->latitude == 41.8801);
    CHECK(hit->longitude == -71.385);
    CHECK(hit->confidence == doctest::Approx(0.875));
    CHECK(server.last_single_ == "12 PINE ST, PAWTUCKET, RI");
    CHECK(server.last_token_ == "s3cret");

    CHECK_FALSE(geo.geocode({"NOWHERE", "X"}));
    CHECK_THROWS_AS(geo.geocode({"404", "X"}), BackendUnavailable);
    CHECK_THROWS_AS(geo.geocode({"GARBLED", "X"}), BackendUnavailable);

    cfg.score_scale = 50;
    CHECK(HttpGeocoder(cfg).geocode({"12 PINE ST", "PAWTUCKET"})->confidence == 1.0);
    ::unsetenv("REGMINE_TEST_GEOCODE_TOKEN");
}

TEST_CASE("http geocoder reports unreachable services")
{
    HttpGeocoderConfig cfg;
    {
        httplib::Server probe;
        const int port = probe.bind_to_any_port("127.0.0.1");
        cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/geocode";
    }  // closed again, so nothing listens there
    cfg.timeout_seconds = 1;
    CHECK_THROWS_AS(HttpGeocoder(cfg).geocode({"1 MAIN ST", "X"}), BackendUnavailable);

    cfg.endpoint = "https://example.invalid/geocode";
    CHECK_THROWS_AS(HttpGeocoder{cfg}, Error);
    cfg.endpoint = "http://127.0.0.1:1/";
    cfg.score_scale = 0;
    CHECK_THROWS_AS(HttpGeocoder{cfg}, Error);
}
