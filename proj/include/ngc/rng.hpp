#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ngc {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a; stable across platforms, unlike std::hash.
inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

using Engine = std::mt19937_64;

/// Seed for the named stream `name` at position `index` under a root seed.
///
/// Graph generation, noise and row sampling each draw from their own stream,
/// so adding trials to one of them never shifts the draws of another.
inline constexpr std::uint64_t stream_seed(std::uint64_t root, std::string_view name,
                                           std::uint64_t index = 0) noexcept {
    std::uint64_t s = detail::splitmix64(root ^ detail::fnv1a(name));
    return detail::splitmix64(s + detail::splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
    return Engine(stream_seed(root, name, index));
}

}  // namespace ngc
