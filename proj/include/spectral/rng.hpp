#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace spectral {

/// Engine used for every random draw in the library.
using Rng = std::mt19937_64;

/// SplitMix64 output function: a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Child seed for a keyed sub-stream, e.g. derive_seed(master, {n, trial}).
/// Depends only on (master, keys), never on scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t k : keys) s = splitmix64(s ^ splitmix64(k + 0x632BE59BD9B4E019ull));
    return s;
}

} // namespace spectral
