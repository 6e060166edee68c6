#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace nids {

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string to_hex(std::uint64_t v);

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent named sub-stream of a run seed ("downsample", "split", ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
    return splitmix64(seed ^ fnv1a64(stream));
}

using Rng = std::mt19937_64;

/// Uniform integer in [0, n). Unlike std::uniform_int_distribution the
/// sequence is identical across standard library implementations.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Fisher-Yates with uniform_index.
template <typename It>
void stable_shuffle(It first, It last, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = uniform_index(rng, i);
        std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                       first + static_cast<std::ptrdiff_t>(j));
    }
}

}  // namespace nids
