// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "uarnvc/ii_init.hpp"

using namespace uarnvc;
using namespace uarnvc::ii;

namespace {

Frame constant(double v, std::size_t w = 4, std::size_t h = 3) {
    Frame f(w, h);
    for (auto& x : f.planes) x = v;
    return f;
}

ParamVector pv(std::vector<double> v) {
    ParamVector p;
    const std::size_t n = v.size();
    p.add("w", ad::Tensor::from({n}, std::move(v)));
    return p;
}

std::vector<FitPoint> planted(double a, double b, double c, int n) {
    std::vector<FitPoint> pts;
    for (int i = 0; i < n; ++i) {
        const double mse = 0.002 * i + 0.0003 * (i % 3);
        pts.push_back({mse, std::clamp(1.0 - a * std::exp(-b * mse + c), 0.0, 1.0)});
    }
    return pts;
}

} // namespace

TEST(GopGap, Examples) {
    const std::vector<Frame> a{constant(0.3), constant(0.7)};
    EXPECT_EQ(gop_gap_mse(a, a).mse, 0.0);
    const std::vector<Frame> z{constant(0.0)}, h{constant(0.5)};
    EXPECT_DOUBLE_EQ(gop_gap_mse(z, h).mse, 0.25);
    const std::vector<Frame> four{constant(0), constant(0), constant(0), constant(0)};
    const std::vector<Frame> three{constant(0.1), constant(0.2), constant(0.3)};
    const auto g = gop_gap_mse(four, three);
    EXPECT_EQ(g.pairs, 3u);
    EXPECT_NEAR(g.mse, (0.01 + 0.04 + 0.09) / 3.0, 1e-15);
    const std::vector<Frame> other{constant(0.0, 5, 3)};
    EXPECT_THROW(gop_gap_mse(z, other), std::invalid_argument);
}

TEST(Epsilon, Examples) {
    EXPECT_EQ(epsilon_for(0.0, default_schedule()), 0.0);
    EXPECT_NEAR(epsilon_for(2.0, {1.0, 0.5, 0.0}), 1.0 - std::exp(-1.0), 1e-15);
    EXPECT_NEAR(epsilon_for(1e6, default_schedule()), 1.0, 1e-12);
    EXPECT_THROW(epsilon_for(-1.0, default_schedule()), std::invalid_argument);
}

TEST(Epsilon, MonotoneOnGrid) {
    const auto s = default_schedule();
    double prev = -1.0;
    for (int i = 0; i < 1000; ++i) {
        const double e = epsilon_for(i * 1e-3, s);
        EXPECT_GE(e, prev);
        prev = e;
    }
}

TEST(Interpolate, Examples) {
    const auto r = pv({0.0, 1.0, -2.0}), t = pv({4.0, 3.0, 5.0});
    EXPECT_TRUE(interpolate_init(r, t, 0.0) == t);
    EXPECT_TRUE(interpolate_init(r, t, 1.0) == r);
    EXPECT_DOUBLE_EQ(interpolate_init(pv({0.0}), pv({4.0}), 0.25)[0].tensor[0], 3.0);
    EXPECT_THROW(interpolate_init(r, t, 1.5), std::invalid_argument);
}

TEST(Fit, RecoversPlantedSchedule) {
    const auto pts = planted(1.0, 0.5 * 100, 0.0, 25);
    const auto f = fit_schedule(pts, true);
    EXPECT_NEAR(f.schedule.b, 50.0, 1e-6);
    EXPECT_LT(f.residual_norm, 1e-10);
    EXPECT_FALSE(f.degenerate);
}

TEST(Fit, RecoversUnitB) {
    std::vector<FitPoint> pts;
    for (int i = 1; i <= 12; ++i) pts.push_back({0.25 * i, 1.0 - std::exp(-0.5 * 0.25 * i)});
    const auto f = fit_schedule(pts, true);
    EXPECT_NEAR(f.schedule.b, 0.5, 1e-6);
    EXPECT_LT(f.residual_norm, 1e-10);
}

TEST(Fit, UnconstrainedAmplitude) {
    std::vector<FitPoint> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({0.25 * i, 1.0 - 0.8 * std::exp(-0.5 * 0.25 * i)});
    const auto f = fit_schedule(pts, false);
    EXPECT_NEAR(f.schedule.a * std::exp(f.schedule.c), 0.8, 1e-6);
    EXPECT_NEAR(f.schedule.b, 0.5, 1e-6);
}

TEST(Fit, AllZeroTargetsAreDegenerate) {
    const std::vector<FitPoint> pts{{0.0, 0.0}, {0.1, 0.0}, {0.2, 0.0}};
    const auto f = fit_schedule(pts, true);
    EXPECT_TRUE(f.degenerate);
    for (double m : {0.0, 0.5, 10.0}) EXPECT_EQ(epsilon_for(m, f.schedule), 0.0);
}

TEST(Fit, Preconditions) {
    const std::vector<FitPoint> two{{0.0, 0.0}, {0.1, 0.1}};
    EXPECT_THROW(fit_schedule(two, true), std::invalid_argument);
    const std::vector<FitPoint> dup{{0.1, 0.0}, {0.1, 0.1}, {0.2, 0.2}};
    EXPECT_THROW(fit_schedule(dup, true), std::invalid_argument);
}
