// Parallel morphology kernels against the serial reference.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regmine/geocode.hpp"
#include "regmine/raster.hpp"
#include "regmine/raster_reference.hpp"
#include "regmine/synth.hpp"

using namespace regmine;

namespace {

double best_ms(int repeats, const std::function<void()>& body)
{
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

GrayRaster synthetic_page(int width, int height, std::uint64_t seed)
{
    synth::SynthSpec spec;
    spec.seed = seed;
    spec.pages = 1;
    spec.columns = std::max(1, (width - 120 + 48) / (28 * 12 - 2 + 48));
    spec.page_width = width;
    spec.page_height = height;
    for (int n = std::max(1, height / 70); n > 0; --n) {
        spec.records_min = spec.records_max = n;
        try {
            return synth::render_corpus(spec, rhode_island_gazetteer()).images[0];
        } catch (const std::invalid_argument&) {
        }
    }
    return GrayRaster(width, height, 255);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Time the parallel morphology kernels against the serial reference"};
    int width = 2000;
    int height = 3000;
    int repeats = 3;
    int kw = 5;
    int kh = 9;
    std::vector<int> threads;
    std::uint64_t seed = 1;
    app.add_option("--width", width);
    app.add_option("--height", height);
    app.add_option("--repeats", repeats);
    app.add_option("--kernel-width", kw);
    app.add_option("--kernel-height", kh);
    app.add_option("--threads", threads, "thread counts for the parallel kernels (default: 1 and the maximum)");
    app.add_option("--seed", seed);
    CLI11_PARSE(app, argc, argv);

    if (threads.empty()) {
        threads.push_back(1);
        if (omp_get_max_threads() > 1) threads.push_back(omp_get_max_threads());
    }

    const GrayRaster page = synthetic_page(width, height, seed);
    const StructuringKernel k(kw, kh);
    MergeConfig merge;
    merge.kernel = k;
    merge.close_iterations = 1;
    merge.open_iterations = 0;
    const BitRaster bits = threshold_invert(page, merge.threshold);

    struct Case {
        const char* name;
        std::function<BitRaster()> parallel;
        std::function<BitRaster()> serial;
    };
    const std::vector<Case> cases{
        {"threshold", [&] { return threshold_invert(page, 128); }, [&] { return reference::threshold_invert(page, 128); }},
        {"erode", [&] { return erode(bits, k); }, [&] { return reference::erode(bits, k); }},
        {"dilate", [&] { return dilate(bits, k); }, [&] { return reference::dilate(bits, k); }},
        {"close", [&] { return close(bits, k); }, [&] { return reference::close(bits, k); }},
        {"open", [&] { return open(bits, k); }, [&] { return reference::open(bits, k); }},
        {"merge", [&] { return merge_text_blobs(page, merge); }, [&] { return reference::merge_text_blobs(page, merge); }},
    };

    std::printf("page %dx%d, kernel %dx%d, best of %d\n", page.width(), page.height(), kw, kh, repeats);
    std::printf("%-10s %12s", "op", "serial ms");
    for (int t : threads) std::printf(" %9s%-3d", "par ms t=", t);
    std::printf(" %8s\n", "equal");
    const int saved = omp_get_max_threads();
    bool all_equal = true;
    for (const Case& c : cases) {
        BitRaster want;
        const double serial = best_ms(repeats, [&] { want = c.serial(); });
        std::printf("%-10s %12.2f", c.name, serial);
        bool equal = true;
        for (int t : threads) {
            omp_set_num_threads(t);
            BitRaster got;
            const double ms = best_ms(repeats, [&] { got = c.parallel(); });
            equal = equal && got == want;
            std::printf(" %12.2f", ms);
        }
        omp_set_num_threads(saved);
        std::printf(" %8s\n", equal ? "yes" : "NO");
        all_equal = all_equal && equal;
    }
    return all_equal ? 0 : 1;
}
