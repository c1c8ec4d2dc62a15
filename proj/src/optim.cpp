// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uarnvc/error.hpp"

namespace uarnvc {

OptimizerState OptimizerState::for_params(const ParamVector& params, AdamConfig config) {
    OptimizerState s;
    s.config = config;
    for (const auto& seg : params) {
        s.first_moment.emplace_back(seg.tensor.size(), 0.0);
        s.second_moment.emplace_back(seg.tensor.size(), 0.0);
    }
    return s;
}

void adam_step(ParamVector& params, const Gradients& grads, OptimizerState& state, double lr) {
    if (grads.size() != params.segments() || state.first_moment.size() != params.segments()) {
        throw std::invalid_argument("adam_step: gradient/state layout does not match parameters");
    }
    for (std::size_t i = 0; i < params.segments(); ++i) {
        if (grads[i].size() != params[i].tensor.size() || state.first_moment[i].size() != grads[i].size()) {
            throw std::invalid_argument("adam_step: layout mismatch at segment '" + params[i].name + "'");
        }
        for (double g : grads[i]) {
            if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in segment '" + params[i].name + "'");
        }
    }
    const auto& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.segments(); ++i) {
        auto p = params[i].tensor.data();
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        const auto& g = grads[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + c.epsilon);
        }
    }
}

Gradients backward(ad::Tape& tape, const ad::Tensor& loss, ParamVector& params) {
    params.zero_grad();
    tape.backward(loss);
    return params.gradients();
}

double lr_at(int epoch, int total_epochs, double base_lr, double warmup_frac) {
    if (total_epochs <= 0 || epoch < 0 || epoch >= total_epochs) {
        throw std::invalid_argument("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                                    std::to_string(total_epochs) + ")");
    }
    if (!(warmup_frac > 0.0 && warmup_frac < 1.0)) throw std::invalid_argument("lr_at: warmup_frac must be in (0,1)");
    const int warm = static_cast<int>(std::ceil(warmup_frac * total_epochs));
    if (epoch < warm) return base_lr * static_cast<double>(epoch) / static_cast<double>(warm);
    const int span = total_epochs - 1 - warm;
    if (span <= 0) return base_lr;
    const double progress = static_cast<double>(epoch - warm) / static_cast<double>(span);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

} // namespace uarnvc
