#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace bootdqn {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

// Order-sensitive combination of seed material into one 64-bit stream seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

// FNV-1a over bytes, folded through mix64.
std::uint64_t hash_string(std::string_view text);

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace bootdqn
