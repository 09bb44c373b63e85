#include "schedsynth/rng.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "schedsynth/errors.hpp"

namespace schedsynth {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

int sample_categorical(std::span<const double> probs, double u) {
    double total = 0.0;
    for (double p : probs) total += p;
    const double target = u * total;
    double acc = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = static_cast<int>(i);
        acc += probs[i];
        if (target < acc) return static_cast<int>(i);
    }
    return last_positive;
}

int argmax(std::span<const double> values) {
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

int sample_logits(std::span<const double> logits, double temperature, Rng& rng) {
    if (!(temperature >= 0.0)) throw ConfigError("sampling temperature must be >= 0");
    if (temperature == 0.0) return argmax(logits);
    double top = -std::numeric_limits<double>::infinity();
    for (double l : logits) top = std::max(top, l);
    std::vector<double> p(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) p[i] = std::exp((logits[i] - top) / temperature);
    return sample_categorical(p, uniform01(rng));
}

}  // namespace schedsynth
