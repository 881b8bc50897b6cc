#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tractfeat {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt));
}

// FNV-1a, stable across platforms and runs.
inline std::uint64_t hash_text(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view key) {
    return mix_seed(seed, hash_text(key));
}

/// Uniform integer in [0, n) from raw engine output; independent of the
/// standard library's distribution implementation.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
}

inline double uniform_real(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace tractfeat
