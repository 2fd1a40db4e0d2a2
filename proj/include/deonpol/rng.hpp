#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

namespace deonpol {

/**
 * Seeded generator: std::mt19937_64 with explicit conversions.
 *
 * The standard distributions are implementation-defined, so reals and indices are
 * derived by hand to keep streams identical across standard libraries.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0,1) from the top 53 bits of one draw.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0,n), rejection sampling against modulo bias.
    std::size_t below(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        for (;;) {
            std::uint64_t r = engine_();
            if (r < limit) return static_cast<std::size_t>(r % bound);
        }
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace deonpol
