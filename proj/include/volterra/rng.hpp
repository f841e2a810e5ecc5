#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace volterra {

/// Counter-based Gaussian stream. Each draw is a pure function of
/// (seed, stream, counter), so generation is order-independent and
/// bitwise-reproducible under any parallel schedule.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Avalanche mix of a (seed, stream, counter) triple.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t h = splitmix64(seed ^ 0x8F0C9E4B2D1A6E35ULL);
    h = splitmix64(h ^ (stream * 0xD6E8FEB86659FD93ULL));
    h = splitmix64(h ^ (counter * 0xA24BAED4963EE407ULL));
    return h;
}

/// Uniform in (0,1]: 53 random bits, never exactly zero.
inline double uniform_pos(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

/// Uniform in [0,1).
inline double uniform(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two derived uniforms.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const std::uint64_t h = mix(seed, stream, counter);
    const double u1 = uniform_pos(splitmix64(h));
    const double u2 = uniform(splitmix64(h ^ 0x94D049BB133111EBULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace rng
} // namespace volterra
