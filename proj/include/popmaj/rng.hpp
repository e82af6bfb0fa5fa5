#pragma once

// Reproducible randomness. The engine is std::mt19937_64 (fully specified by
// the standard); bounded draws use a fixed rejection scheme instead of
// std::uniform_int_distribution, whose output is implementation-defined.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace popmaj {

using Engine = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection of the low partial block.
inline std::uint64_t draw_below(Engine& eng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t x = eng();
        if (x >= threshold) return x % bound;
    }
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double draw_unit(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

/// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Order-sensitive hash of a seed and a list of coordinates.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = mix64(base);
    for (std::uint64_t v : parts) h = mix64(h ^ mix64(v));
    return h;
}

} // namespace popmaj
