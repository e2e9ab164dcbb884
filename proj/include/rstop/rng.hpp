#pragma once

#include <cstdint>
#include <random>

namespace rstop {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to decorrelate per-trial seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent sub-streams per (trial, purpose). Environment draws and policy
// randomness never share a stream, so changing the selector cannot shift the
// realized values a trial sees.
enum class Stream : std::uint64_t { environment = 0, policy = 1 };

inline Rng make_stream(std::uint64_t seed, std::uint64_t trial, Stream s) {
    const std::uint64_t k = seed ^ mix64(trial * 2 + static_cast<std::uint64_t>(s));
    return Rng(mix64(k));
}

// Uniform on [0, 1) with 53 random bits; independent of the standard
// library's distribution implementation so results are portable.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

}  // namespace rstop
