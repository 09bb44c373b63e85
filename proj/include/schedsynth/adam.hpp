#pragma once

#include <cstdint>
#include <vector>

#include "schedsynth/tensor.hpp"

namespace schedsynth {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment estimates per parameter plus the shared step counter.
struct AdamState {
    AdamOptions options;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step = 0;
};

AdamState make_adam_state(const std::vector<Tensor>& params, AdamOptions options = {});

// One bias-corrected Adam update of params in place. grads[i] must have the
// size of params[i]; an empty gradient counts as zero.
void adam_step(AdamState& state, std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads);

// Convenience: uses and then clears the gradients accumulated on params.
void adam_step(AdamState& state, std::vector<Tensor>& params);

}  // namespace schedsynth
