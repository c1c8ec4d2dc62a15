// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "uarnvc/param_vector.hpp"

namespace uarnvc {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    AdamConfig config;
    Gradients first_moment;
    Gradients second_moment;
    std::uint64_t step = 0;

    static OptimizerState for_params(const ParamVector& params, AdamConfig config = {});
};

// Bias-corrected Adam update applied in place. Throws NumericError naming the
// segment if a gradient is not finite.
void adam_step(ParamVector& params, const Gradients& grads, OptimizerState& state, double lr);

// Clears the gradients of `params`, replays `tape` from `loss`, and returns the
// gradients aligned with `params` (zeros where unreachable).
Gradients backward(ad::Tape& tape, const ad::Tensor& loss, ParamVector& params);

// Linear warm-up from 0 over ceil(warmup_frac * total) epochs, then cosine
// decay reaching 0 at the last epoch.
double lr_at(int epoch, int total_epochs, double base_lr, double warmup_frac);

} // namespace uarnvc
