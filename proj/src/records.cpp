#include "regmine/records.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "regmine/error.hpp"
#include "regmine/text.hpp"

namespace regmine {

namespace {

std::regex compile(const std::string& pattern, const std::string& what)
{
    try {
        return std::regex(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        throw FormatError(what + " does not compile: " + e.what());
    }
}

constexpr const char* kDefaultRecordPattern =
    R"(^([^,;]+), ([^;]+)(?:; ([^;]*))?(?:; ([^;]*?)(?: ?EMP\.?)?)?$)";
constexpr const char* kDefaultHeadingPattern = R"(^[A-Z][A-Z ]+$)";

} // namespace

RecordGrammar::RecordGrammar(std::string record_pattern, std::vector<std::string> captures,
                             std::string heading_pattern, int heading_group)
    : record_pattern_(std::move(record_pattern)),
      heading_pattern_(std::move(heading_pattern)),
      captures_(std::move(captures)),
      heading_group_(heading_group),
      record_re_(compile(record_pattern_, "record_pattern")),
      heading_re_(compile(heading_pattern_, "heading_pattern"))
{
    if (group_of("name") < 0 || group_of("address") < 0) {
        throw FormatError("record_captures must name both 'name' and 'address'");
    }
    const auto groups = static_cast<int>(record_re_.mark_count());
    if (static_cast<int>(captures_.size()) > groups) {
        throw FormatError("record_captures lists " + std::to_string(captures_.size()) + " names but the pattern has " +
                          std::to_string(groups) + " groups");
    }
    if (heading_group_ < 0 || heading_group_ > static_cast<int>(heading_re_.mark_count())) {
        throw FormatError("heading_group is out of range");
    }
}

RecordGrammar RecordGrammar::default_grammar()
{
    return RecordGrammar(kDefaultRecordPattern, {"name", "address", "sector", "employees"}, kDefaultHeadingPattern, 0);
}

RecordGrammar RecordGrammar::parse(std::string_view contents, const std::string& origin)
{
    std::map<std::string, std::string> kv;
    int lineno = 0;
    for (const std::string& raw : text::split(contents, '\n')) {
        ++lineno;
        const std::string line = text::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        kv[text::trim(line.substr(0, eq))] = text::trim(line.substr(eq + 1));
    }
    for (const auto& [key, value] : kv) {
        if (key != "record_pattern" && key != "record_captures" && key != "heading_pattern" && key != "heading_group") {
            throw FormatError(origin + ": unknown grammar key '" + key + "'");
        }
    }
    auto required = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end() || it->second.empty()) throw FormatError(origin + ": missing " + key);
        return it->second;
    };
    std::vector<std::string> captures;
    for (const auto& c : text::split(required("record_captures"), ',')) captures.push_back(text::trim(c));
    int heading_group = 0;
    if (auto it = kv.find("heading_group"); it != kv.end()) {
        try {
            heading_group = std::stoi(it->second);
        } catch (const std::exception&) {
            throw FormatError(origin + ": heading_group must be an integer");
        }
    }
    return RecordGrammar(required("record_pattern"), std::move(captures), required("heading_pattern"), heading_group);
}

RecordGrammar RecordGrammar::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open grammar " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

int RecordGrammar::group_of(std::string_view field) const
{
    for (std::size_t i = 0; i < captures_.size(); ++i) {
        if (captures_[i] == field) return static_cast<int>(i) + 1;
    }
    return -1;
}

std::optional<std::pair<int, int>> parse_employees(std::string_view raw)
{
    std::string s;
    for (char c : raw) {
        switch (c) {
        case 'O': case 'o': s.push_back('0'); break;
        case 'I': case 'l': case '|': s.push_back('1'); break;
        case ' ': break;
        default: s.push_back(c);
        }
    }
    static const std::regex range_re(R"(^([0-9]+)(?:-([0-9]+))?$)");
    std::smatch m;
    if (!std::regex_match(s, m, range_re)) return std::nullopt;
    try {
        const int lo = std::stoi(m[1].str());
        const int hi = m[2].matched ? std::stoi(m[2].str()) : lo;
        if (lo > hi) return std::nullopt;
        return std::pair{lo, hi};
    } catch (const std::out_of_range&) {
        return std::nullopt;
    }
}

BlockParse parse_block(const std::vector<std::string>& lines, const RecordGrammar& grammar,
                       const Provenance& provenance)
{
    const std::string block = text::normalize_whitespace(text::join(lines, " "));
    std::smatch m;
    if (std::regex_match(block, m, grammar.heading_regex())) {
        std::string city = text::normalize_whitespace(m[grammar.heading_group()].str());
        if (!city.empty()) return Heading{std::move(city), provenance.page, provenance.bbox.top};
    }
    if (std::regex_match(block, m, grammar.record_regex())) {
        auto field = [&](std::string_view name) -> std::string {
            const int g = grammar.group_of(name);
            if (g < 0 || !m[g].matched) return {};
            return text::normalize_whitespace(m[g].str());
        };
        ParsedRecord rec;
        rec.name = field("name");
        rec.address = field("address");
        rec.sector = field("sector");
        if (auto emp = parse_employees(field("employees"))) {
            rec.employees_min = emp->first;
            rec.employees_max = emp->second;
        }
        rec.provenance = provenance;
        if (!rec.name.empty() && !rec.address.empty()) return rec;
    }
    return Noise{block};
}

Propagation propagate_headings(const std::vector<StreamItem>& stream, std::vector<Heading> centered,
                               std::optional<Heading> carry)
{
    std::stable_sort(centered.begin(), centered.end(), [](const Heading& a, const Heading& b) { return a.y < b.y; });
    auto section_of = [&](int top) {
        return static_cast<std::size_t>(std::count_if(centered.begin(), centered.end(),
                                                      [&](const Heading& h) { return h.y < top; }));
    };

    std::vector<std::size_t> order(stream.size());
    std::vector<std::size_t> section(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        order[i] = i;
        section[i] = section_of(stream[i].top);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (section[a] != section[b]) return section[a] < section[b];
        return stream[a].column < stream[b].column;
    });

    Propagation out;
    std::optional<Heading> current = std::move(carry);
    std::size_t active_section = 0;
    auto enter = [&](std::size_t s) {
        while (active_section < s) {
            current = centered[active_section];
            ++active_section;
        }
    };
    for (std::size_t i : order) {
        enter(section[i]);
        if (const auto* h = std::get_if<Heading>(&stream[i].parse)) {
            current = *h;
        } else if (const auto* r = std::get_if<ParsedRecord>(&stream[i].parse)) {
            ParsedRecord rec = *r;
            if (rec.city_raw.empty() && current) rec.city_raw = current->city;
            out.records.push_back(std::move(rec));
        }
    }
    enter(centered.size());
    out.carry = std::move(current);
    return out;
}

} // namespace regmine
