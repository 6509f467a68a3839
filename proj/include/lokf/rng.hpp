#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace lokf {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/// Derives an independent stream seed from a parent seed, a purpose tag and
/// integer keys. Children never depend on data values, only on their names.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                                    std::initializer_list<std::uint64_t> keys = {}) {
    std::uint64_t h = detail::splitmix64(parent ^ detail::fnv1a(tag));
    for (std::uint64_t k : keys) h = detail::splitmix64(h ^ detail::splitmix64(k + 0x632BE59BD9B4E019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace lokf
