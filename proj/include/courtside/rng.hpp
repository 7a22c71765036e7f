#pragma once

#include <cstdint>
#include <random>

namespace courtside {

// Uniform double in [0, 1) from the top 53 bits of the generator output.
// Used instead of std::uniform_real_distribution so that seeded runs are
// reproducible across standard library implementations.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform_unit(rng) * static_cast<double>(n));
}

}  // namespace courtside
