#pragma once

// Central finite-difference check of reverse-mode gradients, shared by the
// unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "schedsynth/tensor.hpp"

namespace gradcheck {

struct Result {
    double max_rel_error = 0.0;  // worst tensor
    std::size_t entries = 0;
};

// Per input tensor: ||analytic - numeric|| / max(||analytic||, ||numeric||, floor),
// Euclidean norms over the tensor's entries. The floor keeps gradients that are
// zero by symmetry (key biases under softmax) from dividing rounding noise by ~0.
inline Result check(std::vector<schedsynth::Tensor>& inputs, const std::function<schedsynth::Tensor()>& f,
                    double h = 1e-5, double floor = 1e-5) {
    for (auto& t : inputs) t.zero_grad();
    schedsynth::backward(f());
    std::vector<std::vector<double>> analytic;
    for (auto& t : inputs) {
        const auto g = t.grad();
        analytic.emplace_back(g.begin(), g.end());
        analytic.back().resize(t.size(), 0.0);
    }
    Result r;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto x = inputs[i].mutable_data();
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double saved = x[j];
            x[j] = saved + h;
            const double up = f().item();
            x[j] = saved - h;
            const double down = f().item();
            x[j] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[i][j];
            diff += (a - numeric) * (a - numeric);
            na += a * a;
            nn += numeric * numeric;
            ++r.entries;
        }
        const double denom = std::max({std::sqrt(na), std::sqrt(nn), floor});
        r.max_rel_error = std::max(r.max_rel_error, std::sqrt(diff) / denom);
    }
    return r;
}

}  // namespace gradcheck
