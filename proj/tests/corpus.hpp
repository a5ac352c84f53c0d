#pragma once

// Synthetic corpus helpers shared by the pipeline tests and the acceptance run.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "regmine/ocr.hpp"
#include "regmine/pipeline.hpp"
#include "regmine/synth.hpp"

namespace testing {

// Profile matching what `regmine synth` writes next to a corpus.
inline regmine::Profile synth_profile(const regmine::synth::SynthSpec& spec)
{
    regmine::Profile p;
    p.year = spec.year;
    p.merge.kernel = regmine::StructuringKernel(spec.merge_kernel_width, spec.merge_kernel_height);
    p.merge.close_iterations = 1;
    p.merge.open_iterations = 0;
    p.columns = static_cast<std::size_t>(spec.columns);
    p.min_block_area = 50;
    return p;
}

inline regmine::Backends file_backends(const regmine::Gazetteer& gaz)
{
    regmine::Backends b;
    b.ocr = std::make_shared<regmine::MockOcrBackend>();
    b.gazetteer = std::make_shared<regmine::Gazetteer>(gaz);
    b.geocoder = std::make_shared<regmine::FileGeocoder>(gaz);
    b.grammar = std::make_shared<regmine::RecordGrammar>(regmine::RecordGrammar::default_grammar());
    return b;
}

// Empty when the record reproduces the sidecar row, else the first differing field.
inline std::string truth_mismatch(const regmine::GeoRecord& got, const regmine::synth::TruthRecord& want,
                                  bool check_location = true)
{
    const regmine::ParsedRecord& r = got.record;
    if (r.name != want.name) return "name '" + r.name + "' vs '" + want.name + "'";
    if (r.address != want.address) return "address '" + r.address + "' vs '" + want.address + "'";
    if (r.city_raw != want.city) return "city '" + r.city_raw + "' vs '" + want.city + "'";
    if (r.sector != want.sector) return "sector '" + r.sector + "' vs '" + want.sector + "'";
    if (r.employees_min != want.employees_min || r.employees_max != want.employees_max) return "employees";
    if (r.provenance.page != want.page) return "page";
    if (check_location && want.location) {
        // the sidecar keeps six decimals
        if (!got.geo) return "missing location";
        if (std::abs(got.geo->latitude - want.location->lat) > 1e-6 ||
            std::abs(got.geo->longitude - want.location->lon) > 1e-6) {
            return "location";
        }
    }
    return {};
}

inline std::size_t count_mismatches(const std::vector<regmine::GeoRecord>& got,
                                    const std::vector<regmine::synth::TruthRecord>& want, bool check_location = true)
{
    std::size_t bad = got.size() > want.size() ? got.size() - want.size() : want.size() - got.size();
    for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
        if (!truth_mismatch(got[i], want[i], check_location).empty()) ++bad;
    }
    return bad;
}

inline std::vector<regmine::synth::TruthRecord> all_truth(const std::vector<regmine::synth::PageTruth>& pages)
{
    std::vector<regmine::synth::TruthRecord> out;
    for (const auto& p : pages) out.insert(out.end(), p.records.begin(), p.records.end());
    return out;
}

} // namespace testing
