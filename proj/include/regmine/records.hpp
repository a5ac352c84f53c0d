#pragma once

#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "regmine/contours.hpp"

namespace regmine {

struct Provenance {
    int year = 0;
    int page = 0;
    BBox bbox;
};

struct ParsedRecord {
    std::string name;
    std::string address;
    std::string city_raw;  // filled by heading propagation
    std::string sector;
    std::optional<int> employees_min;
    std::optional<int> employees_max;
    Provenance provenance;
};

struct Heading {
    std::string city;
    int page = 0;
    int y = 0;  // top of the heading block, in page pixels
};

struct Noise {
    std::string text;
};

using BlockParse = std::variant<ParsedRecord, Heading, Noise>;

/// Declarative record syntax: one regex for listings with a capture name per
/// group, one for heading blocks. ECMAScript syntax, matched against the
/// block text with lines joined by single spaces.
class RecordGrammar {
public:
    /// `captures[i]` names group i + 1; recognized names are name, address,
    /// sector and employees, and "-" skips a group. `heading_group` selects
    /// the city group of heading_pattern (0 = whole match).
    RecordGrammar(std::string record_pattern, std::vector<std::string> captures, std::string heading_pattern,
                  int heading_group = 0);

    /// `name ", " address "; " sector "; " employees " EMP"`; headings are a
    /// line of upper-case letters and spaces.
    static RecordGrammar default_grammar();

    /// Key-value grammar file: record_pattern, record_captures,
    /// heading_pattern, heading_group. Throws FormatError, including for
    /// patterns that do not compile.
    static RecordGrammar load(const std::filesystem::path& path);
    static RecordGrammar parse(std::string_view contents, const std::string& origin = "<grammar>");

    const std::regex& record_regex() const { return record_re_; }
    const std::regex& heading_regex() const { return heading_re_; }
    int group_of(std::string_view field) const;  // -1 when absent
    int heading_group() const { return heading_group_; }
    const std::string& record_pattern() const { return record_pattern_; }
    const std::string& heading_pattern() const { return heading_pattern_; }

private:
    std::string record_pattern_;
    std::string heading_pattern_;
    std::vector<std::string> captures_;
    int heading_group_;
    std::regex record_re_;
    std::regex heading_re_;
};

/// Employee counts like "10-49" or "25", tolerant of O/0 and I/l/1 confusions.
std::optional<std::pair<int, int>> parse_employees(std::string_view text);

/// Heading pattern first, then the record pattern, else Noise. Never throws.
BlockParse parse_block(const std::vector<std::string>& lines, const RecordGrammar& grammar,
                       const Provenance& provenance);

/// A parsed column block with the position used to interleave centered
/// headings.
struct StreamItem {
    BlockParse parse;
    std::size_t column = 0;
    int top = 0;
};

struct Propagation {
    std::vector<ParsedRecord> records;
    std::optional<Heading> carry;
};

/// Assigns each record the city of the nearest preceding heading. Centered
/// headings split the page into horizontal sections read one after another,
/// each column by column; records before any heading on the page take
/// `carry`. Returns the heading in force at the end of the page as the next
/// carry. Records that already have a city keep it.
Propagation propagate_headings(const std::vector<StreamItem>& stream, std::vector<Heading> centered,
                               std::optional<Heading> carry);

} // namespace regmine
