#pragma once

#include <cstdint>
#include <random>

namespace pmdroute {

// Portable draws on top of mt19937_64. The standard distributions are
// implementation-defined; these are not, so seeded fixtures are identical
// across standard libraries.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Uniform index in [0, n); modulo bias is below 2^-40 for n < 2^24.
    std::uint64_t index(std::uint64_t n) { return engine_() % n; }

private:
    std::mt19937_64 engine_;
};

}  // namespace pmdroute
