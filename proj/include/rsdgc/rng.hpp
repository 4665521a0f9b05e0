#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace rsdgc {

// All randomness in the project flows through these helpers. std::mt19937_64
// is fully specified by the standard; the distributions below are hand-rolled
// because std::*_distribution is implementation-defined and every simulation
// output must be reproducible byte for byte.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Collapses (seed, stream ids...) into one 64-bit seed. Distinct id tuples
// give statistically independent streams.
template <typename... Ids>
uint64_t mix_seed(uint64_t seed, Ids... ids) {
    uint64_t h = splitmix64(seed);
    ((h = splitmix64(h ^ static_cast<uint64_t>(ids))), ...);
    return h;
}

inline std::mt19937_64 make_engine(uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

// Unbiased integer in [0, n) via rejection sampling.
inline uint64_t uniform_below(std::mt19937_64& eng, uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
        uint64_t x = eng();
        if (x >= threshold) return x % n;
    }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

// Standard normal via Box-Muller. Draws two uniforms per call and discards
// the second variate so the stream consumed per call is fixed.
inline double normal01(std::mt19937_64& eng) {
    const double u1 = static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& eng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(uniform_below(eng, i));
        std::swap(v[i - 1], v[j]);
    }
}

inline std::vector<int64_t> identity_permutation(int64_t n) {
    std::vector<int64_t> p(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
    return p;
}

// k distinct indices drawn uniformly from [0, n), returned sorted ascending.
std::vector<int64_t> sample_distinct(std::mt19937_64& eng, int64_t n, int64_t k);

}  // namespace rsdgc
