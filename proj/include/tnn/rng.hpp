#pragma once
#ifndef TNN_RNG_HPP
#define TNN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace tnn {

/// Small, portable PRNG (SplitMix64). Output is identical on every platform,
/// which pins down seeded tree constructions and synthetic datasets bit-for-bit.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound), bound >= 1. Rejection sampling, unbiased.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t rem = (0ULL - bound) % bound; // 2^64 mod bound
        std::uint64_t x;
        do {
            x = next();
        } while (x < rem);
        return x % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (no stdlib distribution, for portability).
    double gaussian() {
        double u1;
        do {
            u1 = unit();
        } while (u1 == 0.0);
        const double u2 = unit();
        const double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

/// Derives an independent child stream from (seed, salt). Used to give every
/// tree node its own RNG stream keyed by the node's path, so construction is
/// reproducible independent of traversal order.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t salt) {
    SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL * (salt + 1)));
    return g.next();
}

/// Draws two distinct indices in [0, n), n >= 2, uniformly without replacement.
inline std::pair<std::uint64_t, std::uint64_t> draw_distinct_pair(SplitMix64& g, std::uint64_t n) {
    const std::uint64_t a = g.below(n);
    std::uint64_t b = g.below(n - 1);
    if (b >= a) ++b;
    return {a, b};
}

/// Uniform direction on the unit sphere in `dim` dimensions.
inline std::vector<double> unit_sphere_direction(SplitMix64& g, std::size_t dim) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            v[i] = g.gaussian();
            norm2 += v[i] * v[i];
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

} // namespace tnn

#endif // TNN_RNG_HPP
