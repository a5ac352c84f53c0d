#pragma once

#include <cstdint>
#include <iterator>
#include <random>

namespace regmine {

// std::uniform_*_distribution is implementation-defined, so generated corpora
// would differ between standard libraries. These helpers only use the raw
// 64-bit engine output, which the standard pins down exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    /// Uniform integer in [lo, hi].
    std::int64_t range(std::int64_t lo, std::int64_t hi)
    {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return uniform() < p; }

    template <typename Container>
    const auto& pick(const Container& c)
    {
        return c[static_cast<std::size_t>(below(std::size(c)))];
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent sub-seeds (per page, per cell).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace regmine
