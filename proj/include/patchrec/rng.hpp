#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace patchrec {

// splitmix64 finalizer; decorrelates numerically close seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Derives an independent stream seed from a base seed and a component name
// (FNV-1a over the name folded into the base). All randomness in the toolkit
// flows from per-command base seeds through this function, so any sub-result
// is reproducible in isolation.
std::uint64_t derive_seed(std::uint64_t base, std::string_view component);

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace patchrec
