#pragma once

#include <cmath>
#include <cstdint>

#include "bubblecast/special_functions.hpp"

namespace bubblecast::rng {

// All stochastic operations in this library take explicit 64-bit seeds.
// Two generators are used, both documented in the README:
//
//  * splitmix64 in counter mode: the k-th output is mix(seed + k * GOLDEN).
//    Arbitrary positions of the stream can be addressed directly, which lets
//    the MARMA simulator attach one innovation to each absolute time index.
//    Changing the burn-in then re-uses the identical innovations on the
//    retained window.
//  * xoshiro256++ for sequential sampling loops (batch sampling, training
//    noise, bootstrap), seeded from splitmix64.

inline constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// k-th output of the splitmix64 stream with the given seed.
inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t k) {
    return splitmix64_mix(seed + (k + 1) * GOLDEN);
}

/// Derives an independent substream seed from (seed, tag). Used to give
/// each stochastic component of a pipeline its own stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64_mix(splitmix64_mix(seed ^ 0x6A09E667F3BCC909ull) + tag * GOLDEN);
}

/// Maps a 64-bit word to the open interval (0,1).
inline double to_open_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s += GOLDEN;
            word = splitmix64_mix(s);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw in the open interval (0,1).
    double uniform() { return to_open_unit(next()); }

    /// Uniform draw in (lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via inverse CDF (one uniform per draw, fully
    /// reproducible ordering).
    double normal() { return sf::norm_ppf(uniform()); }

    /// Exponential(1).
    double exponential() { return -std::log(uniform()); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // multiply-shift; bias is negligible for n << 2^64
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

}  // namespace bubblecast::rng
