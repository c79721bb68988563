#pragma once
//! Deterministic random streams.
//!
//! Seeds are expanded with SplitMix64 (Steele, Lea, Flood 2014):
//!   state += 0x9E3779B97F4A7C15
//!   z = state
//!   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!   return z ^ (z >> 31)
//! Streams are xoshiro256** 1.0 (Blackman, Vigna). Doubles use the top 53 bits:
//! (next() >> 11) * 2^-53, giving values in [0, 1).
//! The per-chain subseed for chain index i is the (i+1)-th SplitMix64 output of
//! the state (seed ^ 0x6A09E667F3BCC909). All operations are integer or exact
//! float conversions, so streams reproduce across platforms.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace afftail {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Subseed for an independent stream, a pure function of (seed, index).
inline constexpr std::uint64_t derive_subseed(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t state = (seed ^ 0x6A09E667F3BCC909ULL) + index * 0x9E3779B97F4A7C15ULL;
    return splitmix64(state);
}

class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    constexpr double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1].
    constexpr double uniform_pos() noexcept { return 1.0 - uniform(); }

    /// Standard normal via Box-Muller (one of the pair is discarded so the
    /// stream position depends only on the number of draws).
    double normal() noexcept {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

} // namespace afftail
