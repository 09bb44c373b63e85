#include "schedsynth/adam.hpp"

#include <cmath>

#include "schedsynth/errors.hpp"

namespace schedsynth {

AdamState make_adam_state(const std::vector<Tensor>& params, AdamOptions options) {
    AdamState state;
    state.options = options;
    for (const auto& p : params) {
        state.m.emplace_back(p.size(), 0.0);
        state.v.emplace_back(p.size(), 0.0);
    }
    return state;
}

void adam_step(AdamState& state, std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads) {
    if (params.size() != state.m.size() || grads.size() != params.size()) {
        throw ShapeError("adam_step: parameter count does not match optimizer state");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != state.m[i].size() || (!grads[i].empty() && grads[i].size() != params[i].size())) {
            throw ShapeError("adam_step: shape mismatch for parameter " + std::to_string(i));
        }
    }
    const auto& o = state.options;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(o.beta1, t);
    const double c2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto value = params[i].mutable_data();
        auto& m = state.m[i];
        auto& v = state.v[i];
        const auto& g = grads[i];
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double gj = g.empty() ? 0.0 : g[j];
            m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
            v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
            const double m_hat = m[j] / c1;
            const double v_hat = v[j] / c2;
            value[j] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
        }
    }
}

void adam_step(AdamState& state, std::vector<Tensor>& params) {
    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (auto& p : params) grads.emplace_back(p.grad().begin(), p.grad().end());
    adam_step(state, params, grads);
    for (auto& p : params) p.zero_grad();
}

}  // namespace schedsynth
