// regmine command line: run, report, synth.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "regmine/error.hpp"
#include "regmine/image_io.hpp"
#include "regmine/pipeline.hpp"
#include "regmine/profile.hpp"
#include "regmine/synth.hpp"
#include "regmine/text.hpp"

namespace fs = std::filesystem;
using namespace regmine;

namespace {

std::string env_or(const char* name, const std::string& fallback)
{
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

void write_file(const fs::path& path, const std::string& contents)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << contents;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(text::csv_split(line));
    }
    return rows;
}

std::size_t to_size(const std::string& s, const fs::path& origin)
{
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw FormatError(origin.string() + ": bad count '" + s + "'");
    }
}

// Hand counts per page: counts.csv (page,count) when present, otherwise the
// synthetic truth sidecar.
std::map<std::size_t, std::size_t> page_counts(const fs::path& input, std::size_t pages)
{
    std::map<std::size_t, std::size_t> counts;
    if (fs::exists(input / "counts.csv")) {
        for (const auto& row : read_csv_rows(input / "counts.csv")) {
            if (row.size() < 2) throw FormatError((input / "counts.csv").string() + ": expected page,count");
            counts[to_size(row[0], input / "counts.csv")] = to_size(row[1], input / "counts.csv");
        }
        return counts;
    }
    if (fs::exists(input / "truth.csv")) {
        for (std::size_t p = 1; p <= pages; ++p) counts[p] = 0;
        for (const auto& t : synth::read_truth(input / "truth.csv")) ++counts[static_cast<std::size_t>(t.page)];
        return counts;
    }
    throw Error("--estimate-samples needs counts.csv or truth.csv in " + input.string());
}

Estimate sample_estimate(const fs::path& input, std::size_t total_pages, std::size_t samples, int year)
{
    if (samples == 0 || samples > total_pages) {
        throw Error("--estimate-samples must be between 1 and the page count (" + std::to_string(total_pages) + ")");
    }
    const auto counts = page_counts(input, total_pages);
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t page = 1 + i * total_pages / samples;  // evenly spaced
        auto it = counts.find(page);
        if (it == counts.end()) throw Error("no hand count for page " + std::to_string(page));
        picked.push_back(it->second);
    }
    return estimate_records(picked, total_pages, year);
}

std::string estimates_csv(const std::vector<Estimate>& estimates)
{
    std::ostringstream o;
    o << "year,sampled_pages,mean_records_per_page,total_pages,estimated_records\n";
    for (const auto& e : estimates) {
        o << e.year << ',' << e.sampled_pages << ',' << text::format_fixed(e.mean_records_per_page, 4) << ','
          << e.total_pages << ',' << e.estimated_records << '\n';
    }
    return o.str();
}

std::string summary_csv(const std::vector<RegistryResult>& results)
{
    std::ostringstream o;
    o << "year,pages,identified,geocoded_confident\n";
    for (const auto& r : results) {
        o << r.year << ',' << r.pages.size() << ',' << r.identified << ',' << r.geocoded_confident << '\n';
    }
    return o.str();
}

struct RunOptions {
    std::vector<std::string> inputs;
    std::vector<std::string> profiles;
    std::string gazetteer;
    std::string out;
    std::string format = "csv";
    double min_conf = -1;
    double density_cell = 0;
    std::string sector;
    std::size_t estimate_samples = 0;
    bool overlays = false;
};

int run(const RunOptions& o)
{
    std::vector<std::string> profile_paths = o.profiles;
    if (profile_paths.empty()) {
        const std::string env = env_or("REGMINE_PROFILE", "");
        if (env.empty()) throw Error("no profile: pass --profile or set REGMINE_PROFILE");
        profile_paths.push_back(env);
    }
    if (profile_paths.size() != 1 && profile_paths.size() != o.inputs.size()) {
        throw Error("give one profile, or one per --input");
    }
    const std::string gazetteer = o.gazetteer.empty() ? env_or("REGMINE_GAZETTEER", "") : o.gazetteer;

    std::vector<Profile> profiles;
    for (std::size_t i = 0; i < o.inputs.size(); ++i) {
        Profile p = Profile::load(profile_paths[profile_paths.size() == 1 ? 0 : i]);
        if (!gazetteer.empty()) p.gazetteer = fs::absolute(gazetteer).lexically_normal().string();
        if (o.min_conf >= 0) p.min_conf = o.min_conf;
        p.validate();
        profiles.push_back(std::move(p));
    }
    const double min_conf = profiles.front().min_conf;

    std::vector<Pipeline> pipelines;
    pipelines.reserve(profiles.size());
    for (const auto& p : profiles) pipelines.emplace_back(p);
    std::vector<RegistryJob> jobs;
    for (std::size_t i = 0; i < o.inputs.size(); ++i) {
        auto pages = list_pages(o.inputs[i]);
        if (pages.empty()) std::cerr << "warning: no page images in " << o.inputs[i] << "\n";
        jobs.push_back({&pipelines[i], std::move(pages)});
    }

    const std::vector<RegistryResult> results = process_registries(jobs);

    fs::create_directories(o.out);
    const fs::path out(o.out);
    if (o.format == "csv" || o.format == "both") write_file(out / "records.csv", records_csv(results));
    if (o.format == "geojson" || o.format == "both") write_file(out / "records.geojson", records_geojson(results, min_conf));
    write_file(out / "pages.csv", page_stats_csv(results));
    write_file(out / "summary.csv", summary_csv(results));

    if (o.density_cell > 0) {
        std::vector<GeoRecord> all;
        for (const auto& r : results) all.insert(all.end(), r.records.begin(), r.records.end());
        const std::optional<std::string> filter = o.sector.empty() ? std::nullopt : std::optional(o.sector);
        write_file(out / "density.csv",
                   format_density_csv(density_grid(all, o.density_cell, rhode_island_bounds(), filter, min_conf)));
    }

    if (o.estimate_samples > 0) {
        std::vector<Estimate> estimates;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            estimates.push_back(sample_estimate(o.inputs[i], jobs[i].pages.size(), o.estimate_samples, results[i].year));
        }
        write_file(out / "estimates.csv", estimates_csv(estimates));
        const std::string table = format_accuracy_csv(accuracy_report(results, estimates));
        write_file(out / "accuracy.csv", table);
        std::cout << table;
    }

    if (o.overlays) {
        const fs::path dir = out / "overlays";
        fs::create_directories(dir);
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            std::optional<Heading> carry;
            for (std::size_t p = 0; p < jobs[i].pages.size(); ++p) {
                const GrayRaster img = read_image(jobs[i].pages[p]);
                PageResult r = pipelines[i].process_page(img, static_cast<int>(p) + 1, carry);
                carry = r.carry;
                char name[64];
                std::snprintf(name, sizeof name, "%d_%03zu.png", results[i].year, p + 1);
                write_png(dir / name, render_overlay(img, r.blocks));
            }
        }
    }

    for (const auto& r : results) {
        std::cerr << "year " << r.year << ": " << r.pages.size() << " pages, " << r.identified << " records, "
                  << r.geocoded_confident << " geocoded with confidence >= " << text::format_fixed(min_conf, 2) << "\n";
    }
    return 0;
}

int report(const std::string& dir, const std::string& estimates_path)
{
    const fs::path out(dir);
    std::vector<RegistryResult> results;
    for (const auto& row : read_csv_rows(out / "summary.csv")) {
        if (row.size() != 4) throw FormatError((out / "summary.csv").string() + ": expected 4 columns");
        RegistryResult r;
        r.year = static_cast<int>(to_size(row[0], out / "summary.csv"));
        r.identified = to_size(row[2], out / "summary.csv");
        r.geocoded_confident = to_size(row[3], out / "summary.csv");
        results.push_back(r);
    }
    const fs::path est = estimates_path.empty() ? out / "estimates.csv" : fs::path(estimates_path);
    std::vector<Estimate> estimates;
    for (const auto& row : read_csv_rows(est)) {
        if (row.size() != 5) throw FormatError(est.string() + ": expected 5 columns");
        Estimate e;
        e.year = static_cast<int>(to_size(row[0], est));
        e.sampled_pages = to_size(row[1], est);
        e.mean_records_per_page = std::stod(row[2]);
        e.total_pages = to_size(row[3], est);
        e.estimated_records = to_size(row[4], est);
        estimates.push_back(e);
    }
    std::cout << format_accuracy_csv(accuracy_report(results, estimates));
    return 0;
}

struct SynthOptions {
    synth::SynthSpec spec;
    std::string out;
    double salt_pepper = 0;
    double glyph_corrupt = 0;
    bool indent = false;
    double street_coverage = 1.0;
};

int run_synth(SynthOptions o)
{
    synth::SynthSpec& s = o.spec;
    if (o.salt_pepper > 0 || o.glyph_corrupt > 0) s.noise = synth::NoiseModel{o.salt_pepper, o.glyph_corrupt};
    if (o.indent) s.separation = synth::Separation::Indent;
    if (!(o.street_coverage >= 0 && o.street_coverage <= 1)) throw Error("--street-coverage must be in [0,1]");

    const Gazetteer gaz = rhode_island_gazetteer();
    const fs::path out(o.out);
    const synth::Corpus corpus = synth::generate_corpus(s, gaz, out);

    if (o.street_coverage < 1) {
        // drop a deterministic share of streets so only part of the corpus geocodes exactly
        Gazetteer partial = gaz;
        Rng rng(mix_seed(s.seed, 0xC0FFEE));
        for (const auto& city : gaz.cities()) {
            for (const auto& [street, where] : gaz.streets(city)) {
                if (!rng.chance(o.street_coverage)) partial.remove_street(city, street);
            }
        }
        partial.save(out / "gazetteer.txt");
    }

    Profile p;
    p.year = s.year;
    p.merge.kernel = StructuringKernel(s.merge_kernel_width, s.merge_kernel_height);
    p.merge.close_iterations = 1;
    p.merge.open_iterations = 0;
    p.columns = static_cast<std::size_t>(s.columns);
    p.min_block_area = 50;
    p.gazetteer = "gazetteer.txt";
    p.save(out / "profile.txt");

    std::cerr << "wrote " << s.pages << " pages, " << corpus.total_records() << " records to " << out.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Mine geocoded business records from scanned registry pages"};
    app.require_subcommand(1);

    RunOptions ro;
    auto* run_cmd = app.add_subcommand("run", "process registries and write records");
    run_cmd->add_option("--input", ro.inputs, "registry directory (repeat for several years)")->required();
    run_cmd->add_option("--profile", ro.profiles, "profile file, one or one per input (env REGMINE_PROFILE)");
    run_cmd->add_option("--gazetteer", ro.gazetteer, "gazetteer file overriding the profile (env REGMINE_GAZETTEER)");
    run_cmd->add_option("--out", ro.out, "output directory")->required();
    run_cmd->add_option("--format", ro.format, "csv, geojson or both")
        ->check(CLI::IsMember({"csv", "geojson", "both"}));
    run_cmd->add_option("--min-conf", ro.min_conf, "confidence cutoff (default from profile, 0.75)")
        ->check(CLI::Range(0.0, 1.0));
    run_cmd->add_option("--density-cell", ro.density_cell, "write density.csv with cells of this many degrees")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--sector", ro.sector, "sector substring for the density grid");
    run_cmd->add_option("--estimate-samples", ro.estimate_samples,
                        "hand-counted pages per registry for the record estimate");
    run_cmd->add_flag("--overlays", ro.overlays, "write PNG layout overlays");

    std::string report_dir;
    std::string report_estimates;
    auto* report_cmd = app.add_subcommand("report", "print the accuracy table of a run");
    report_cmd->add_option("--out", report_dir, "output directory of a previous run")->required();
    report_cmd->add_option("--estimates", report_estimates, "estimates CSV (default: <out>/estimates.csv)");

    SynthOptions so;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic registry with ground truth");
    synth_cmd->add_option("--out", so.out, "corpus directory")->required();
    synth_cmd->add_option("--seed", so.spec.seed);
    synth_cmd->add_option("--pages", so.spec.pages);
    synth_cmd->add_option("--columns", so.spec.columns);
    synth_cmd->add_option("--records-min", so.spec.records_min, "records per column, lower bound");
    synth_cmd->add_option("--records-max", so.spec.records_max, "records per column, upper bound");
    synth_cmd->add_option("--heading-frequency", so.spec.heading_frequency);
    synth_cmd->add_flag("--centered-heading", so.spec.centered_heading);
    synth_cmd->add_option("--jitter", so.spec.jitter_px);
    synth_cmd->add_option("--salt-pepper", so.salt_pepper);
    synth_cmd->add_option("--glyph-corrupt", so.glyph_corrupt);
    synth_cmd->add_flag("--indent", so.indent, "separate records by first-line indentation");
    synth_cmd->add_option("--year", so.spec.year);
    synth_cmd->add_option("--column-chars", so.spec.column_chars);
    synth_cmd->add_option("--page-width", so.spec.page_width);
    synth_cmd->add_option("--page-height", so.spec.page_height);
    synth_cmd->add_option("--kernel-width", so.spec.merge_kernel_width);
    synth_cmd->add_option("--kernel-height", so.spec.merge_kernel_height);
    synth_cmd->add_option("--street-coverage", so.street_coverage, "share of streets kept in gazetteer.txt");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return run(ro);
        if (*report_cmd) return report(report_dir, report_estimates);
        if (*synth_cmd) return run_synth(so);
    } catch (const BackendUnavailable& e) {
        std::cerr << "backend unavailable: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
