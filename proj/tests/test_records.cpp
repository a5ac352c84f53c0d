#include <doctest.h>

#include <fstream>

#include "regmine/error.hpp"
#include "regmine/geocode.hpp"
#include "regmine/records.hpp"
#include "regmine/synth.hpp"
#include "support.hpp"

using namespace regmine;

namespace {

ParsedRecord record(std::string name, int top = 0)
{
    ParsedRecord r;
    r.name = std::move(name);
    r.address = "1 MAIN ST";
    r.provenance.bbox = BBox{0, top, 10, top + 10};
    return r;
}

StreamItem item(BlockParse p, std::size_t column, int top)
{
    return StreamItem{std::move(p), column, top};
}

std::vector<std::string> names(const std::vector<ParsedRecord>& rs)
{
    std::vector<std::string> out;
    for (const auto& r : rs) out.push_back(r.name);
    return out;
}

std::vector<std::string> cities(const std::vector<ParsedRecord>& rs)
{
    std::vector<std::string> out;
    for (const auto& r : rs) out.push_back(r.city_raw);
    return out;
}

} // namespace

TEST_CASE("parse_block examples under the default grammar")
{
    const RecordGrammar g = RecordGrammar::default_grammar();
    const Provenance prov{1931, 4, BBox{10, 20, 300, 60}};

    const BlockParse h = parse_block({"PAWTUCKET"}, g, prov);
    REQUIRE(std::holds_alternative<Heading>(h));
    CHECK(std::get<Heading>(h).city == "PAWTUCKET");
    CHECK(std::get<Heading>(h).page == 4);
    CHECK(std::get<Heading>(h).y == 20);

    const BlockParse r = parse_block({"ACME JEWELRY CO, 12 PINE ST; JEWELRY; 10-49 EMP"}, g, prov);
    REQUIRE(std::holds_alternative<ParsedRecord>(r));
    const auto& rec = std::get<ParsedRecord>(r);
    CHECK(rec.name == "ACME JEWELRY CO");
    CHECK(rec.address == "12 PINE ST");
    CHECK(rec.sector == "JEWELRY");
    CHECK(rec.employees_min == 10);
    CHECK(rec.employees_max == 49);
    CHECK(rec.city_raw.empty());
    CHECK(rec.provenance.year == 1931);
    CHECK(rec.provenance.bbox == prov.bbox);

    const BlockParse n = parse_block({"~~~ %% ~~"}, g, prov);
    REQUIRE(std::holds_alternative<Noise>(n));
    CHECK(std::get<Noise>(n).text == "~~~ %% ~~");
}

TEST_CASE("records split over lines are joined with single spaces")
{
    const RecordGrammar g = RecordGrammar::default_grammar();
    const BlockParse r = parse_block({"ACME JEWELRY", "CO, 12 PINE", "ST; JEWELRY; 10-49", "EMP"}, g, {});
    REQUIRE(std::holds_alternative<ParsedRecord>(r));
    CHECK(std::get<ParsedRecord>(r).name == "ACME JEWELRY CO");
    CHECK(std::get<ParsedRecord>(r).address == "12 PINE ST");

    const BlockParse h = parse_block({"NORTH", "PROVIDENCE"}, g, {});
    REQUIRE(std::holds_alternative<Heading>(h));
    CHECK(std::get<Heading>(h).city == "NORTH PROVIDENCE");
}

TEST_CASE("employee counts tolerate O/0 and I/1 confusion")
{
    CHECK(parse_employees("10-49") == std::pair{10, 49});
    CHECK(parse_employees("25") == std::pair{25, 25});
    CHECK(parse_employees("1O-4I") == std::pair{10, 41});
    CHECK(parse_employees("I00-lOO") == std::pair{100, 100});
    CHECK_FALSE(parse_employees("49-10"));
    CHECK_FALSE(parse_employees("MANY"));
    CHECK_FALSE(parse_employees(""));
    CHECK_FALSE(parse_employees("99999999999999"));

    const BlockParse r = parse_block({"BRAYTON CO, 4 ELM ST; TEXTILES; 5O-99 EMP"}, RecordGrammar::default_grammar(), {});
    REQUIRE(std::holds_alternative<ParsedRecord>(r));
    CHECK(std::get<ParsedRecord>(r).employees_min == 50);
    CHECK(std::get<ParsedRecord>(r).employees_max == 99);
}

TEST_CASE("headings win over records and records need name and address")
{
    const RecordGrammar g = RecordGrammar::default_grammar();
    CHECK(std::holds_alternative<Heading>(parse_block({"WEST WARWICK"}, g, {})));
    CHECK(std::holds_alternative<Noise>(parse_block({"ACME CO."}, g, {})));
    CHECK(std::holds_alternative<Noise>(parse_block({}, g, {})));
    CHECK(std::holds_alternative<Noise>(parse_block({"12"}, g, {})));
    const BlockParse po = parse_block({"ACME CO, P.O. BOX 141; TOOLS; 5 EMP"}, g, {});
    REQUIRE(std::holds_alternative<ParsedRecord>(po));
    CHECK(std::get<ParsedRecord>(po).address == "P.O. BOX 141");
}

TEST_CASE("parse_block is total on random input")
{
    Rng rng(41);
    const RecordGrammar g = RecordGrammar::default_grammar();
    const std::string alphabet = "ABC XYZ019,;-.'&()/~%EMP";
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<std::string> lines;
        const int n = static_cast<int>(rng.range(0, 4));
        for (int i = 0; i < n; ++i) lines.push_back(testing::random_word(rng, 30, alphabet));
        const BlockParse p = parse_block(lines, g, {});
        if (const auto* r = std::get_if<ParsedRecord>(&p)) {
            REQUIRE(!r->name.empty());
            REQUIRE(!r->address.empty());
            if (r->employees_min) REQUIRE(*r->employees_min <= *r->employees_max);
        } else if (const auto* h = std::get_if<Heading>(&p)) {
            REQUIRE(!h->city.empty());
        }
    }
}

TEST_CASE("generated records parse back to their own fields")
{
    const Gazetteer gaz = rhode_island_gazetteer();
    const RecordGrammar g = RecordGrammar::default_grammar();
    synth::SynthSpec spec;
    spec.pages = 8;
    spec.seed = 7;
    std::size_t checked = 0;
    for (const auto& page : synth::generate_content(spec, gaz)) {
        for (const auto& section : page.sections) {
            for (const auto& column : section.columns) {
                for (const auto& it : column) {
                    if (it.is_heading) {
                        const BlockParse h = parse_block({it.city}, g, {});
                        REQUIRE(std::holds_alternative<Heading>(h));
                        REQUIRE(std::get<Heading>(h).city == it.city);
                        continue;
                    }
                    const BlockParse p = parse_block({it.record.text()}, g, {});
                    REQUIRE(std::holds_alternative<ParsedRecord>(p));
                    const auto& r = std::get<ParsedRecord>(p);
                    REQUIRE(r.name == it.record.name);
                    REQUIRE(r.address == it.record.address);
                    REQUIRE(r.sector == it.record.sector);
                    REQUIRE(r.employees_min == it.record.employees_min);
                    REQUIRE(r.employees_max == it.record.employees_max);
                    ++checked;
                }
            }
        }
    }
    CHECK(checked == 160);
}

TEST_CASE("grammar files")
{
    const std::string text =
        "# pipe-separated listings\n"
        "record_pattern = ^(.+) \\| (.+) \\| ([0-9]+)$\n"
        "record_captures = name, address, employees\n"
        "heading_pattern = ^== ([A-Z ]+) ==$\n"
        "heading_group = 1\n";
    const RecordGrammar g = RecordGrammar::parse(text);
    CHECK(g.group_of("name") == 1);
    CHECK(g.group_of("sector") == -1);
    const BlockParse r = parse_block({"ACME CO | 12 PINE ST | 40"}, g, {});
    REQUIRE(std::holds_alternative<ParsedRecord>(r));
    CHECK(std::get<ParsedRecord>(r).employees_min == 40);
    CHECK(std::get<ParsedRecord>(r).sector.empty());
    const BlockParse h = parse_block({"== BRISTOL =="}, g, {});
    REQUIRE(std::holds_alternative<Heading>(h));
    CHECK(std::get<Heading>(h).city == "BRISTOL");

    testing::TempDir dir("grammar");
    std::ofstream(dir.path() / "g.txt") << text;
    CHECK(RecordGrammar::load(dir.path() / "g.txt").record_pattern() == g.record_pattern());
    CHECK_THROWS_AS(RecordGrammar::load(dir.path() / "missing.txt"), FormatError);
}

TEST_CASE("grammar errors")
{
    const std::string ok_heading = "heading_pattern = ^[A-Z]+$\n";
    CHECK_THROWS_AS(RecordGrammar::parse("record_pattern = ^(.+)$\nrecord_captures = name\n" + ok_heading), FormatError);
    CHECK_THROWS_AS(RecordGrammar::parse("record_pattern = ^((.+)$\nrecord_captures = name, address\n" + ok_heading),
                    FormatError);
    CHECK_THROWS_AS(RecordGrammar::parse("record_pattern = ^(.+),(.+)$\nrecord_captures = name, address, sector\n" +
                                         ok_heading),
                    FormatError);
    CHECK_THROWS_AS(RecordGrammar::parse("record_pattern = ^(.+),(.+)$\nrecord_captures = name, address\n" + ok_heading +
                                         "heading_group = 2\n"),
                    FormatError);
    CHECK_THROWS_AS(RecordGrammar::parse("record_pattern = ^(.+),(.+)$\nrecord_captures = name, address\n" + ok_heading +
                                         "colour = blue\n"),
                    FormatError);
    CHECK_THROWS_AS(RecordGrammar::parse("record_pattern = ^(.+),(.+)$\n" + ok_heading), FormatError);
    CHECK_THROWS_AS(RecordGrammar::parse("just words\n"), FormatError);
    CHECK_NOTHROW(RecordGrammar::parse("record_pattern = ^(.+),(-?)(.+)$\nrecord_captures = name, -, address\n" + ok_heading));
}

TEST_CASE("propagate_headings examples")
{
    const std::vector<StreamItem> page1{
        item(Heading{"A", 1, 0}, 0, 0),      item(record("R1"), 0, 20), item(record("R2"), 0, 40),
        item(Heading{"B", 1, 60}, 0, 60),    item(record("R3"), 0, 80),
    };
    const Propagation p1 = propagate_headings(page1, {}, std::nullopt);
    CHECK(names(p1.records) == std::vector<std::string>{"R1", "R2", "R3"});
    CHECK(cities(p1.records) == std::vector<std::string>{"A", "A", "B"});
    REQUIRE(p1.carry);
    CHECK(p1.carry->city == "B");

    const Propagation p2 = propagate_headings({item(record("R4"), 0, 10)}, {}, p1.carry);
    CHECK(cities(p2.records) == std::vector<std::string>{"B"});
    CHECK(p2.carry->city == "B");

    const Propagation none = propagate_headings({item(record("R5"), 0, 10)}, {}, std::nullopt);
    CHECK(none.records[0].city_raw.empty());
    CHECK_FALSE(none.carry);
}

TEST_CASE("centered headings split the page into sections")
{
    const std::vector<StreamItem> stream{
        item(record("L400"), 0, 400), item(record("L600"), 0, 600),
        item(record("R410"), 1, 410), item(record("R610"), 1, 610),
    };
    const Propagation p = propagate_headings(stream, {Heading{"NEWPORT", 1, 500}}, Heading{"BRISTOL", 0, 0});
    CHECK(names(p.records) == std::vector<std::string>{"L400", "R410", "L600", "R610"});
    CHECK(cities(p.records) == std::vector<std::string>{"BRISTOL", "BRISTOL", "NEWPORT", "NEWPORT"});
    CHECK(p.carry->city == "NEWPORT");

    // a heading with nothing below it still becomes the carry
    const Propagation tail = propagate_headings({item(record("X"), 0, 100)}, {Heading{"CRANSTON", 1, 900}}, std::nullopt);
    CHECK(tail.carry->city == "CRANSTON");
}

TEST_CASE("records that already name a city keep it")
{
    ParsedRecord r = record("R");
    r.city_raw = "ESSEX";
    const Propagation p = propagate_headings({item(Heading{"A", 1, 0}, 0, 0), item(r, 0, 10)}, {}, std::nullopt);
    CHECK(p.records[0].city_raw == "ESSEX");
}

TEST_CASE("propagation preserves record count and order")
{
    Rng rng(42);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<StreamItem> stream;
        std::vector<std::string> want_names, want_cities;
        std::optional<Heading> carry;
        if (rng.chance(0.5)) carry = Heading{"CARRY", 0, 0};
        std::string current = carry ? carry->city : "";
        const std::size_t columns = static_cast<std::size_t>(rng.range(1, 3));
        int n = 0;
        for (std::size_t c = 0; c < columns; ++c) {
            int y = 0;
            const int items = static_cast<int>(rng.range(0, 12));
            for (int i = 0; i < items; ++i) {
                y += static_cast<int>(rng.range(5, 40));
                const double roll = rng.uniform();
                if (roll < 0.2) {
                    current = "C" + std::to_string(n++);
                    stream.push_back(item(Heading{current, 1, y}, c, y));
                } else if (roll < 0.3) {
                    stream.push_back(item(Noise{"~"}, c, y));
                } else {
                    const std::string name = "R" + std::to_string(n++);
                    stream.push_back(item(record(name, y), c, y));
                    want_names.push_back(name);
                    want_cities.push_back(current);
                }
            }
        }
        const Propagation p = propagate_headings(stream, {}, carry);
        REQUIRE(names(p.records) == want_names);
        REQUIRE(cities(p.records) == want_cities);
        if (current.empty()) {
            REQUIRE_FALSE(p.carry);
        } else {
            REQUIRE(p.carry->city == current);
        }
    }
}
