#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace levylab {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Stable 64-bit FNV-1a hash, used for stream names and config hashing.
std::uint64_t fnv1a(std::string_view text);

/// Child seed for sample `index` of stream `stream` under `master`.
/// Stream identity is (master, stream, index), so results never depend on
/// which worker draws which sample.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) {
    return derive_seed(master, fnv1a(stream), index);
}

Engine make_engine(std::uint64_t seed);

}  // namespace levylab
