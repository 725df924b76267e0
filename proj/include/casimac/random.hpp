#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace casimac {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * Seed for an independent substream keyed by (seed, k1, k2, ...).
 *
 * Substreams depend only on their keys, never on the order in which they are
 * requested, so batched or parallel evaluation reproduces serial results.
 */
inline std::uint64_t substream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t k : keys) {
        h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
    }
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    return Rng(substream_seed(seed, keys));
}

}  // namespace casimac
