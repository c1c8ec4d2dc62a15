// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Interpolation-based initialization of P-models.
//
// The gap between two adjacent GOPs is the MSE of position-aligned frames; it
// is mapped to a random fraction
//
//     eps = 1 - a * exp(-b * mse + c),  clamped to [0, 1]
//
// and the P-model starts from eps * random + (1 - eps) * previous_trained.

#pragma once

#include <span>
#include <vector>

#include "uarnvc/frame.hpp"
#include "uarnvc/param_vector.hpp"

namespace uarnvc::ii {

struct EpsilonSchedule {
    double a = 1.0;
    double b = 1.0;
    double c = 0.0;
    bool operator==(const EpsilonSchedule&) const = default;
};

// Fitted on data/epsilon_calibration.csv (produced by tools/calibrate_epsilon)
// with MSE measured on [0,1]-normalized frames.
inline constexpr double kDefaultB = 5.4222;

EpsilonSchedule default_schedule();

struct GopGap {
    double mse = 0.0;
    std::size_t pairs = 0;
};

// Mean over min(len_prev, len_cur) position-aligned pairs of per-pixel MSE.
GopGap gop_gap_mse(std::span<const Frame> prev_gop, std::span<const Frame> cur_gop);

double epsilon_for(double mse, const EpsilonSchedule& sched);
inline double epsilon_for(const GopGap& gap, const EpsilonSchedule& sched) { return epsilon_for(gap.mse, sched); }

ParamVector interpolate_init(const ParamVector& rand_params, const ParamVector& trained_prev, double epsilon);

struct FitPoint {
    double mse = 0.0;
    double epsilon = 0.0;
};

struct FitResult {
    EpsilonSchedule schedule;
    double residual_norm = 0.0;
    // All target epsilons equal: a constant schedule (b = 0) is returned.
    bool degenerate = false;
};

// Least squares over the points. With `constrained` the fit keeps a * e^c = 1
// (so eps(0) = 0) and solves for b alone; otherwise a * e^c is fitted jointly
// with b and reported as a with c = 0 (only the product is identifiable).
FitResult fit_schedule(std::span<const FitPoint> points, bool constrained = true);

} // namespace uarnvc::ii
