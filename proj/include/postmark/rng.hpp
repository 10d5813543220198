#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

namespace postmark {

// splitmix64 finalizer. Bit-mixes a 64-bit value; used both as a standalone
// hash combiner and as the output stage of SplitMix64.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Counter-based keyed generator (splitmix64). Output i is a pure function of
// (seed, i), which is what makes tables and mocks reproducible across builds
// and platforms. The exact definition is recorded in docs/protocol.md.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~0ull - ~0ull % n;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % n;
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Box-Muller, explicit so the stream does not depend on the standard
// library's distribution implementation.
inline void fill_gaussian(SplitMix64& g, std::span<float> out) {
    std::size_t i = 0;
    while (i < out.size()) {
        double u1;
        do {
            u1 = g.next_double();
        } while (u1 <= 0.0);
        const double u2 = g.next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        out[i++] = static_cast<float>(r * std::cos(a));
        if (i < out.size()) out[i++] = static_cast<float>(r * std::sin(a));
    }
}

// Fisher-Yates permutation of {0..n-1} drawn from the given generator.
inline std::vector<std::size_t> seeded_permutation(std::size_t n, SplitMix64& g) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(g.next_below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace postmark
