#ifndef STREAMGLM_RNG_HPP
#define STREAMGLM_RNG_HPP

#include <cstdint>
#include <random>

namespace streamglm {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based seed split: child stream `index` of `parent`. Replication r
/// and batch j map to derive_seed(derive_seed(master, r), j), so any batch is
/// reproducible in isolation and streams never share state.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ mix64(index + 0x517cc1b727220a95ULL));
}

}  // namespace streamglm

#endif
