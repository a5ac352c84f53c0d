#include <doctest.h>

#include <fstream>

#include "regmine/error.hpp"
#include "regmine/profile.hpp"
#include "support.hpp"

using namespace regmine;
namespace fs = std::filesystem;

TEST_CASE("defaults are valid")
{
    const Profile p;
    CHECK_NOTHROW(p.validate());
    CHECK(p.merge.kernel == StructuringKernel(3, 9));
    CHECK(p.columns == 2);
    CHECK(p.min_conf == 0.75);
    CHECK(p.indent_for(1200) == 30);
    Profile q;
    q.indent_px = 12;
    CHECK(q.indent_for(1200) == 12);
}

TEST_CASE("profile text parses every key")
{
    const std::string text =
        "# registry for one year\n"
        "year = 1931\n"
        "threshold = 110   # darker scans\n"
        "kernel_width = 5\n"
        "kernel_height = 9\n"
        "close_iterations = 2\n"
        "open_iterations = 0\n"
        "columns = 3\n"
        "sigma_threshold = 2.5\n"
        "center_tol = 0.03\n"
        "sigma_floor = 1.25\n"
        "kmeans_max_iter = 50\n"
        "kmeans_tol = 0.01\n"
        "indent_px = 14\n"
        "min_rows = 3\n"
        "min_block_area = 40\n"
        "grammar = grammars/1931.txt\n"
        "ocr_backend = tesseract\n"
        "tesseract_path = bin/tess\n"
        "tesseract_flags = -l eng  --oem 1\n"
        "tesseract_psm = 4\n"
        "ocr_scratch = /var/tmp/ocr\n"
        "geocoder = http\n"
        "gazetteer = ri.txt\n"
        "http_endpoint = http://localhost:8080/geocode\n"
        "http_api_key_env = ARCGIS_TOKEN\n"
        "http_timeout = 2.5\n"
        "http_score_scale = 1\n"
        "http_region = RHODE ISLAND\n"
        "http_max_in_flight = 8\n"
        "min_ratio = 0.85\n"
        "min_conf = 0.7\n";
    const Profile p = Profile::parse(text, "/data/profiles");
    CHECK(p.year == 1931);
    CHECK(p.merge.threshold == 110);
    CHECK(p.merge.kernel == StructuringKernel(5, 9));
    CHECK(p.merge.close_iterations == 2);
    CHECK(p.merge.open_iterations == 0);
    CHECK(p.columns == 3);
    CHECK(p.classify.sigma_threshold == 2.5);
    CHECK(p.classify.center_tol == 0.03);
    CHECK(p.classify.sigma_floor == 1.25);
    CHECK(p.kmeans.max_iter == 50);
    CHECK(p.kmeans.tol == 0.01);
    CHECK(p.indent_px == 14);
    CHECK(p.min_rows == 3);
    CHECK(p.min_block_area == 40);
    CHECK(p.grammar == "/data/profiles/grammars/1931.txt");
    CHECK(p.ocr_backend == "tesseract");
    CHECK(p.tesseract.engine == "/data/profiles/bin/tess");
    CHECK(p.tesseract.extra_flags == std::vector<std::string>{"-l", "eng", "--oem", "1"});
    CHECK(p.tesseract.page_segmentation_mode == 4);
    CHECK(p.tesseract.scratch_dir == "/var/tmp/ocr");
    CHECK(p.geocoder == "http");
    CHECK(p.gazetteer == "/data/profiles/ri.txt");
    CHECK(p.http.endpoint == "http://localhost:8080/geocode");
    CHECK(p.http.api_key_env == "ARCGIS_TOKEN");
    CHECK(p.http.timeout_seconds == 2.5);
    CHECK(p.http.score_scale == 1);
    CHECK(p.http.region == "RHODE ISLAND");
    CHECK(p.http.max_in_flight == 8);
    CHECK(p.min_ratio == 0.85);
    CHECK(p.min_conf == 0.7);

    const Profile again = Profile::parse(p.serialize(), "/elsewhere");
    CHECK(again.serialize() == p.serialize());
}

TEST_CASE("special values are not treated as paths")
{
    const Profile p = Profile::parse("tesseract_path = tesseract\n", "/base");
    CHECK(p.tesseract.engine == "tesseract");
    CHECK(p.grammar == "default");
    CHECK(p.gazetteer == "builtin:rhode-island");
    CHECK(p.tesseract.scratch_dir.empty());
}

TEST_CASE("malformed profiles are rejected")
{
    CHECK_THROWS_AS(Profile::parse("year 1931\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("year = 1931\nyear = 1932\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("colour = red\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("year = 19x1\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("min_conf = 0.5.1\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("kernel_width = 4\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("open_iterations = 4\nclose_iterations = 1\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("columns = 0\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("min_conf = 1.5\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("ocr_backend = abbyy\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("geocoder = http\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::parse("http_max_in_flight = 0\n", "."), FormatError);
    CHECK_THROWS_AS(Profile::load("/nonexistent/profile.txt"), FormatError);
}

TEST_CASE("profiles load relative to their own directory")
{
    testing::TempDir dir("profile");
    fs::create_directories(dir.path() / "y1931");
    std::ofstream(dir.path() / "y1931" / "gaz.txt") << "PAWTUCKET;;41.8787;-71.3826\nPAWTUCKET;PINE ST;41.88;-71.385\n";
    std::ofstream(dir.path() / "y1931" / "g.txt")
        << "record_pattern = ^(.+) \\| (.+)$\nrecord_captures = name, address\nheading_pattern = ^[A-Z]+$\n";
    std::ofstream(dir.path() / "y1931" / "profile.txt") << "year = 1931\ngazetteer = gaz.txt\ngrammar = g.txt\n";

    const Profile p = Profile::load(dir.path() / "y1931" / "profile.txt");
    CHECK(p.gazetteer == (dir.path() / "y1931" / "gaz.txt").string());

    const Backends b = make_backends(p);
    REQUIRE(b.ocr);
    CHECK(b.ocr->info().name == "mock");
    CHECK(b.gazetteer->cities() == std::vector<std::string>{"PAWTUCKET"});
    REQUIRE(b.geocoder);
    CHECK(b.geocoder->name() == "file");
    CHECK(b.grammar->group_of("address") == 2);

    p.save(dir.path() / "copy.txt");
    CHECK(Profile::load(dir.path() / "copy.txt").serialize() == p.serialize());
}

TEST_CASE("backend selection")
{
    Profile p;
    Backends b = make_backends(p);
    CHECK(b.gazetteer->cities().size() == 39);
    CHECK(b.grammar->record_pattern() == RecordGrammar::default_grammar().record_pattern());

    p.geocoder = "none";
    CHECK_FALSE(make_backends(p).geocoder);

    p.geocoder = "http";
    p.http.endpoint = "http://127.0.0.1:9/geocode";
    CHECK(make_backends(p).geocoder->name() == "http");

    p.ocr_backend = "tesseract";
    p.tesseract.engine = "/no/such/tesseract";
    CHECK(make_backends(p).ocr->info().name == "subprocess:/no/such/tesseract");

    p.gazetteer = "/no/such/gazetteer.txt";
    CHECK_THROWS_AS(make_backends(p), FormatError);

    Profile bad;
    bad.ocr_backend = "abbyy";
    CHECK_THROWS_AS(make_backends(bad), std::invalid_argument);
}
