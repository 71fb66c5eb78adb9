#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace transdarc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based stream derivation: the same (seed, keys...) always yields the
/// same stream, independent of the order in which streams are requested.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(seed);
    for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    return Rng{derive_seed(seed, keys)};
}

/// Stream domains, kept distinct so that no two consumers share a stream.
enum class StreamTag : std::uint64_t {
    RareCommon = 1,
    SelfAugment = 2,
    HeadInit = 3,
    Shuffle = 4,
    SynthCenters = 5,
    SynthSamples = 6,
    SynthShift = 7,
};

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

}  // namespace transdarc
