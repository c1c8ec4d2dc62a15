// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Bjontegaard delta rate: average log-rate gap between two RD curves over
// their common quality interval, each curve interpolated by a natural cubic
// spline of ln(bpp) as a function of PSNR.

#pragma once

#include <stdexcept>
#include <vector>

namespace uarnvc::media {

struct RDPoint {
    double bpp = 0.0;
    double psnr = 0.0;
};

class BdRateError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Natural cubic spline through (x_i, y_i), x strictly increasing.
class NaturalSpline {
public:
    NaturalSpline(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    // Exact integral over [a, b] within the knot range.
    double integral(double a, double b) const;
    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

private:
    std::size_t interval(double x) const;
    double antiderivative(std::size_t i, double x) const;
    std::vector<double> x_, y_, m_;  // m_ = second derivatives
};

// Percent; negative means `test` needs fewer bits at equal quality.
// Requires >= 4 points per curve, positive distinct bpp, distinct PSNR, and an
// overlapping PSNR range.
double bd_rate(std::vector<RDPoint> anchor, std::vector<RDPoint> test);

} // namespace uarnvc::media
