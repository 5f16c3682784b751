#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace bdsde {
namespace rng {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (seed, path, step, component): generation is order-independent, any subset
// of paths can be regenerated in isolation, and parallel fills are bit-exact.
namespace detail {

inline std::uint32_t mulhi32(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
}

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint32_t hi0 = mulhi32(M0, ctr[0]);
        const std::uint32_t lo0 = M0 * ctr[0];
        const std::uint32_t hi1 = mulhi32(M1, ctr[2]);
        const std::uint32_t lo1 = M1 * ctr[2];
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

inline double to_unit(std::uint32_t lo, std::uint32_t hi) {
    const std::uint64_t x = (static_cast<std::uint64_t>(hi) << 32) | lo;
    // 53-bit mantissa, shifted into (0, 1) so log() below is safe.
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// Standard normal draw addressed by (seed, path, step, component).
inline double normal(std::uint64_t seed, std::uint64_t path, std::uint32_t step,
                     std::uint32_t component) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), step, component};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                              static_cast<std::uint32_t>(seed >> 32)};
    const auto r = detail::philox4x32(ctr, key);
    const double u1 = detail::to_unit(r[0], r[1]);
    const double u2 = detail::to_unit(r[2], r[3]);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/// Uniform draw on [0, 1), same addressing scheme.
inline double uniform01(std::uint64_t seed, std::uint64_t path, std::uint32_t step,
                        std::uint32_t component) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), step, component};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                              static_cast<std::uint32_t>(seed >> 32)};
    const auto r = detail::philox4x32(ctr, key);
    const std::uint64_t x = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Derives a decorrelated child seed, e.g. one per inner replicate of a
/// nested simulation.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace rng
}  // namespace bdsde
