#pragma once

#include <cstdint>

namespace starc {

// PCG32 (O'Neill, pcg-random.org): 64-bit state, 32-bit output,
// multiplier 6364136223846793005, xorshift-rotate output function.
// Chosen so traces and clusterings are reproducible across platforms;
// the standard <random> distributions are not portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        inc_ = (stream << 1u) | 1u;
        state_ = 0u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Uniform in [0, 1) with 24 bits of mantissa.
    float next_float() { return static_cast<float>(next_u32() >> 8) * 0x1.0p-24f; }

    // Uniform in [0, 1) with 32 bits.
    double next_double() { return static_cast<double>(next_u32()) * 0x1.0p-32; }

    // Uniform in [0, n). Multiply-shift bound; bias is negligible for n << 2^32.
    std::uint32_t next_below(std::uint32_t n) {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(next_u32()) * n) >> 32);
    }

    // Standard normal via Box-Muller; consumes two uniforms per pair, caches the spare.
    double next_gaussian();

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Mixes a step or generation counter into a base seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

} // namespace starc
