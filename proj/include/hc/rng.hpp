#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hc {

// splitmix64 finalizer; good enough to decorrelate derived streams.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derive a named substream seed from a root seed. Every stage of a pipeline
// pulls its own stream so stages can be re-run in isolation.
inline uint64_t derive_seed(uint64_t root, std::string_view name) {
    uint64_t h = 0xcbf29ce484222325ULL ^ root;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

inline uint64_t derive_seed(uint64_t root, std::string_view name, uint64_t index) {
    return mix64(derive_seed(root, name) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(mix64(seed ^ 0xda3e39cb94b95bdbULL)); }

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Uniform integer in [0, n).
inline size_t uniform_index(Rng& rng, size_t n) {
    return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
}

}  // namespace hc
