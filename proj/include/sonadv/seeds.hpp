#ifndef SONADV_SEEDS_HPP
#define SONADV_SEEDS_HPP

#include <cstdint>
#include <string_view>

namespace sonadv {

// splitmix64 finalizer; decorrelates seeds derived from a shared master seed.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Per-stage seed from one master seed and a stage tag. Stable across runs.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    return mix64(master ^ fnv1a64(tag));
}

} // namespace sonadv

#endif
