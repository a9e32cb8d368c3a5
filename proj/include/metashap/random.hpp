#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace metashap {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x51ED270B27A3B4C5ULL));
}

constexpr std::uint64_t stream_id(std::string_view name) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
    return derive_seed(seed, stream_id(stage));
}

} // namespace metashap
