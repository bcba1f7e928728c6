#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hyper_rc {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Stable sub-seed for one stage of a run. Changing the tag set of one stage
// never perturbs the stream of another.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view role) noexcept
{
    return splitmix64(splitmix64(seed) ^ fnv1a64(role));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view role)
{
    return Rng(derive_seed(seed, role));
}

} // namespace hyper_rc
