#pragma once

#include <cmath>
#include <cstdint>

namespace softarm {

// splitmix64. Used both as a stream generator and as a counter-based hash:
// hashing (seed, index) gives every pixel/sample its own reproducible value,
// independent of evaluation order and thread count.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
    return splitmix64(seed ^ (v + 0x9e3779b97f4a7c15ULL));
}

// Uniform double in [0, 1) from the high 53 bits.
inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// One standard normal per counter via Box-Muller (first branch only, so a
// single (seed, counter) pair always maps to the same value).
inline double gaussian_at(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t a = hash_combine(seed, 2 * counter);
    const std::uint64_t b = hash_combine(seed, 2 * counter + 1);
    const double u1 = u64_to_unit(a);
    const double u2 = u64_to_unit(b);
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * M_PI * u2);
}

}  // namespace softarm

#include <cstddef>
#include <utility>
#include <vector>

namespace softarm {

// Fisher-Yates with a self-contained generator, so shuffles do not depend on
// the standard library's distribution implementation.
inline void deterministic_shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
    std::uint64_t state = seed;
    for (std::size_t i = v.size(); i > 1; --i) {
        state = splitmix64(state);
        const std::size_t j = static_cast<std::size_t>(state % i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace softarm
