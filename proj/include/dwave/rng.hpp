#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dwave {

using Rng = std::mt19937_64;

/// Mixes a base seed with a label so independent streams can be derived
/// per utterance, per chunk or per step without touching the parent stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

std::vector<double> standard_normal(Rng& rng, std::size_t n);
double uniform(Rng& rng, double lo, double hi);
std::size_t uniform_index(Rng& rng, std::size_t n);

}  // namespace dwave
