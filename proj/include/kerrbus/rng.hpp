#pragma once

#include <cstdint>
#include <random>

namespace kerrbus {

// SplitMix64 step; used to expand (seed, stream) pairs into generator state.
inline std::uint64_t splitmix64_next(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic random stream. Stream k of master seed s is independent of
/// stream j != k, and the mapping (seed, stream) -> outputs is stable across
/// platforms (mt19937_64 is fully specified; uniforms are built from raw
/// 64-bit draws, not std:: distributions).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t s = seed ^ (0xBF58476D1CE4E5B9ULL * (stream + 1));
        const std::uint64_t a = splitmix64_next(s);
        const std::uint64_t b = splitmix64_next(s);
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        gen_.seed(seq);
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 gen_;
};

}  // namespace kerrbus
