#pragma once

#include <cstdint>
#include <random>

namespace smoothcp {

/// Stafford variant 13 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Engine = std::mt19937_64;

/// Engine whose state depends only on `seed`.
inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)),
                      static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                      static_cast<std::uint32_t>(splitmix64(seed ^ 0x5851f42d4c957f2dULL)),
                      static_cast<std::uint32_t>(splitmix64(seed ^ 0x5851f42d4c957f2dULL) >> 32)};
    return Engine(seq);
}

inline double draw_normal(Engine& rng, double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(rng);
}

} // namespace smoothcp
