#pragma once

#include <cstdint>
#include <cstring>
#include <random>

namespace cml {

/// SplitMix64 step; also used as a seed/stream mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derives an independent substream seed from (seed, stream indices).
/// Streams are a pure function of their indices, so per-trial results do
/// not depend on scheduling or evaluation order.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= a * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull;
    h ^= splitmix64(s);
    s ^= b * 0xda942042e4dd58b5ull + 0x9e6c63d0a2884ull;
    h ^= splitmix64(s);
    return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
    return Rng(substream_seed(seed, a, b));
}

/// Uniform double in [0,1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Hashes the bit patterns of a small set of doubles (used to derive a
/// deterministic digit-stream seed from an initial state).
inline std::uint64_t hash_doubles(const double* xs, std::size_t n) {
    std::uint64_t s = 0x8f1bbcdcbfa53e0bull;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &xs[i], sizeof bits);
        s ^= bits;
        splitmix64(s);
    }
    std::uint64_t t = s;
    return splitmix64(t);
}

}  // namespace cml
