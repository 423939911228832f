#ifndef METASINR_RNG_HPP
#define METASINR_RNG_HPP

#include <cstdint>
#include <random>

namespace metasinr {

// splitmix64; used to derive independent per-(realization, purpose) streams
// from one base seed so parallel runs reduce deterministically.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t purpose) {
    return mix_seed(mix_seed(base ^ mix_seed(stream)) ^ purpose);
}

using Rng = std::mt19937_64;

}  // namespace metasinr

#endif
