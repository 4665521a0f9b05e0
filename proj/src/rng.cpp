#include "rsdgc/rng.hpp"

#include <algorithm>

namespace rsdgc {

std::vector<int64_t> sample_distinct(std::mt19937_64& eng, int64_t n, int64_t k) {
    // Partial Fisher-Yates over an explicit index array; n is desk-scale
    // everywhere this is used.
    std::vector<int64_t> pool = identity_permutation(n);
    std::vector<int64_t> picked;
    picked.reserve(static_cast<size_t>(k));
    for (int64_t i = 0; i < k; ++i) {
        const int64_t j = i + static_cast<int64_t>(uniform_below(eng, static_cast<uint64_t>(n - i)));
        std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
        picked.push_back(pool[static_cast<size_t>(i)]);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

}  // namespace rsdgc
