// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/ii_init.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace uarnvc::ii {

EpsilonSchedule default_schedule() { return {1.0, kDefaultB, 0.0}; }

GopGap gop_gap_mse(std::span<const Frame> prev, std::span<const Frame> cur) {
    if (prev.empty() || cur.empty()) throw std::invalid_argument("gop_gap_mse: empty GOP");
    const std::size_t pairs = std::min(prev.size(), cur.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const auto& a = prev[i];
        const auto& b = cur[i];
        if (a.width != b.width || a.height != b.height) {
            throw std::invalid_argument("gop_gap_mse: resolution mismatch " + std::to_string(a.width) + "x" +
                                        std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                        std::to_string(b.height));
        }
        double s = 0.0;
        for (std::size_t j = 0; j < a.planes.size(); ++j) {
            const double d = a.planes[j] - b.planes[j];
            s += d * d;
        }
        total += s / static_cast<double>(a.planes.size());
    }
    return {total / static_cast<double>(pairs), pairs};
}

double epsilon_for(double mse, const EpsilonSchedule& s) {
    if (!(mse >= 0.0)) throw std::invalid_argument("epsilon_for: mse must be non-negative");
    const double e = 1.0 - s.a * std::exp(-s.b * mse + s.c);
    return std::clamp(e, 0.0, 1.0);
}

ParamVector interpolate_init(const ParamVector& rand_params, const ParamVector& trained_prev, double epsilon) {
    rand_params.require_same_layout(trained_prev, "interpolate_init");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("interpolate_init: epsilon outside [0,1]");
    ParamVector out = trained_prev.clone();
    for (std::size_t i = 0; i < out.segments(); ++i) {
        auto o = out[i].tensor.data();
        auto r = rand_params[i].tensor.data();
        auto t = trained_prev[i].tensor.data();
        for (std::size_t j = 0; j < o.size(); ++j) o[j] = epsilon * r[j] + (1.0 - epsilon) * t[j];
    }
    return out;
}

namespace {

// Minimizes f over b in [lo, hi] (log-spaced grid, then golden section in log b).
double minimize_log(const std::function<double(double)>& f, double lo, double hi) {
    constexpr int kGrid = 240;
    const double llo = std::log(lo), lhi = std::log(hi);
    int best = 0;
    double best_v = INFINITY;
    for (int i = 0; i <= kGrid; ++i) {
        const double v = f(std::exp(llo + (lhi - llo) * i / kGrid));
        if (v < best_v) {
            best_v = v;
            best = i;
        }
    }
    double a = llo + (lhi - llo) * std::max(0, best - 1) / kGrid;
    double b = llo + (lhi - llo) * std::min(kGrid, best + 1) / kGrid;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(std::exp(x1)), f2 = f(std::exp(x2));
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(std::exp(x2));
        }
    }
    return std::exp(0.5 * (a + b));
}

} // namespace

FitResult fit_schedule(std::span<const FitPoint> points, bool constrained) {
    if (points.size() < 3) throw std::invalid_argument("fit_schedule: need at least 3 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].mse >= 0.0)) throw std::invalid_argument("fit_schedule: negative mse");
        for (std::size_t j = 0; j < i; ++j) {
            if (points[i].mse == points[j].mse) throw std::invalid_argument("fit_schedule: mse values must be distinct");
        }
    }
    FitResult res;
    const bool all_equal = std::all_of(points.begin(), points.end(),
                                       [&](const FitPoint& p) { return p.epsilon == points[0].epsilon; });
    if (all_equal) {
        res.degenerate = true;
        res.schedule = {1.0 - points[0].epsilon, 0.0, 0.0};
        return res;
    }

    // Profile amplitude for a given b: a * e^c = 1 when constrained, least
    // squares otherwise.
    auto amplitude = [&](double b) {
        if (constrained) return 1.0;
        double num = 0.0, den = 0.0;
        for (const auto& p : points) {
            const double g = std::exp(-b * p.mse);
            num += (1.0 - p.epsilon) * g;
            den += g * g;
        }
        return den > 0.0 ? num / den : 1.0;
    };
    auto sse = [&](double b) {
        const double amp = amplitude(b);
        double s = 0.0;
        for (const auto& p : points) {
            const double r = 1.0 - amp * std::exp(-b * p.mse) - p.epsilon;
            s += r * r;
        }
        return s;
    };

    double max_mse = 0.0, min_pos = INFINITY;
    for (const auto& p : points) {
        max_mse = std::max(max_mse, p.mse);
        if (p.mse > 0.0) min_pos = std::min(min_pos, p.mse);
    }
    const double lo = 1e-6 / std::max(max_mse, 1e-12);
    const double hi = 1e3 / std::min(min_pos, 1e300);
    double b = minimize_log(sse, lo, std::max(hi, lo * 10.0));

    if (constrained) {
        // Newton polish on d(sse)/db.
        for (int it = 0; it < 20; ++it) {
            double d1 = 0.0, d2 = 0.0;
            for (const auto& p : points) {
                const double e = std::exp(-b * p.mse);
                const double r = 1.0 - e - p.epsilon;
                const double dr = p.mse * e;
                const double ddr = -p.mse * p.mse * e;
                d1 += 2.0 * r * dr;
                d2 += 2.0 * (dr * dr + r * ddr);
            }
            if (!(d2 > 0.0)) break;
            const double nb = b - d1 / d2;
            if (!(nb > 0.0) || sse(nb) > sse(b)) break;
            if (std::abs(nb - b) <= 1e-15 * b) {
                b = nb;
                break;
            }
            b = nb;
        }
    }
    res.schedule = {amplitude(b), b, 0.0};
    res.residual_norm = std::sqrt(sse(b));
    if (!(res.schedule.a > 0.0)) res.degenerate = true;
    return res;
}

} // namespace uarnvc::ii
