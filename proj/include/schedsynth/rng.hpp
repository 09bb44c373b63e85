#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace schedsynth {

using Rng = std::mt19937_64;

// Independent stream seed for (seed, stream index); splitmix64 finaliser.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(derive_seed(seed, stream)); }

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Inverse-CDF draw from a probability vector (need not be exactly normalised).
int sample_categorical(std::span<const double> probs, double u);

// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> values);

// Draws a state from logits at the given temperature; temperature 0 is argmax.
int sample_logits(std::span<const double> logits, double temperature, Rng& rng);

}  // namespace schedsynth
