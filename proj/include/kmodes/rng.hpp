#ifndef KMODES_RNG_HPP
#define KMODES_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

/**
 * @file rng.hpp
 *
 * @brief Self-contained deterministic random number generation.
 *
 * Results must be bit-reproducible across platforms and standard library
 * implementations, so we avoid `std::uniform_int_distribution` and friends
 * (their output is implementation-defined) and implement the generator and
 * all distributions ourselves.
 */

namespace kmodes {

/// One step of the SplitMix64 sequence; also used for seed mixing.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * Derives a single stream seed from a list of words (e.g. master seed,
 * K, initialization id). Every word perturbs the state, so streams for
 * different (K, init) pairs are statistically independent of each other
 * and of the enumeration order.
 */
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t state = 0x243f6a8885a308d3ULL; // pi digits, arbitrary nonzero
    std::uint64_t out = 0;
    for (std::uint64_t w : words) {
        state ^= w;
        out = splitmix64(state);
        state ^= out;
    }
    return out;
}

/**
 * @brief xoshiro256** generator with hand-rolled distributions.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // Seed expansion per the xoshiro authors' recommendation.
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound), bound >= 1. Unbiased (rejection method).
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Standard exponential variate. uniform01() < 1 so the log argument is positive.
    double exponential() {
        return -std::log(1.0 - uniform01());
    }

    /// Fisher-Yates shuffle.
    template<typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

/// Uniform random permutation of 0..n-1.
inline std::vector<std::int32_t> random_permutation(std::int32_t n, Rng& rng) {
    std::vector<std::int32_t> perm(static_cast<std::size_t>(n));
    for (std::int32_t i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
    return perm;
}

}

#endif
