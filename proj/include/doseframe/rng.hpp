#pragma once

// Counter-based stream derivation: every (seed, scenario, replicate) triple
// maps to its own generator, independent of evaluation order.

#include <cstdint>
#include <random>

namespace doseframe {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Stream for one cell of a (seed, a, b) grid.
    static Stream derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
    {
        return Stream(splitmix64(splitmix64(seed ^ splitmix64(a)) + b));
    }

    /// Uniform on [0, 1) with 53 random bits; identical on every platform.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace doseframe
