#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mrq {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Mixes a base seed with a list of stream keys (replicate, sample, SNP, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

/// Independent engine for the stream identified by (seed, keys...).
inline Engine make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    return Engine(derive_seed(seed, keys));
}

}  // namespace mrq
