#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace ddchm {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Derive an independent stream from (seed, stream) without consuming draws
// from the parent sequence. Mixing follows splitmix64.
inline Rng substream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return Rng(z);
}

inline std::string rng_state_string(const Rng& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

inline Rng rng_from_state_string(const std::string& s) {
    Rng rng;
    std::istringstream is(s);
    is >> rng;
    return rng;
}

} // namespace ddchm
