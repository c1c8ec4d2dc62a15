// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/bd_rate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace uarnvc::media {

NaturalSpline::NaturalSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw BdRateError("spline: need at least 2 matching knots");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(x_[i] > x_[i - 1])) throw BdRateError("spline: knots must be strictly increasing");
    }
    // Tridiagonal solve for interior second derivatives (Thomas algorithm).
    m_.assign(n, 0.0);
    if (n == 2) return;
    std::vector<double> diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double lower = x_[i] - x_[i - 1];
        const double w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
        if (i == 1) break;
    }
}

std::size_t NaturalSpline::interval(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, x_.size() - 2);
}

double NaturalSpline::operator()(double x) const {
    const std::size_t i = interval(x);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

// Antiderivative of segment i, zero at x_i.
double NaturalSpline::antiderivative(std::size_t i, double x) const {
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    // d/dx of a = -1/h, of b = 1/h.
    auto F = [&](double aa, double bb) {
        return -h * aa * aa / 2.0 * y_[i] + h * bb * bb / 2.0 * y_[i + 1] +
               (-(aa * aa * aa * aa / 4.0 - aa * aa / 2.0) * m_[i] + (bb * bb * bb * bb / 4.0 - bb * bb / 2.0) * m_[i + 1]) *
                   h * h * h / 6.0;
    };
    return F(a, b) - F(1.0, 0.0);
}

double NaturalSpline::integral(double lo, double hi) const {
    if (hi < lo) return -integral(hi, lo);
    const std::size_t i0 = interval(lo), i1 = interval(hi);
    if (i0 == i1) return antiderivative(i0, hi) - antiderivative(i0, lo);
    double s = antiderivative(i0, x_[i0 + 1]) - antiderivative(i0, lo);
    for (std::size_t i = i0 + 1; i < i1; ++i) s += antiderivative(i, x_[i + 1]);
    s += antiderivative(i1, hi);
    return s;
}

namespace {

NaturalSpline curve_spline(std::vector<RDPoint> pts, const char* which) {
    if (pts.size() < 4) {
        throw BdRateError(std::string(which) + " curve has " + std::to_string(pts.size()) + " points, need at least 4");
    }
    for (const auto& p : pts) {
        if (!(p.bpp > 0.0) || !std::isfinite(p.bpp) || !std::isfinite(p.psnr)) {
            throw BdRateError(std::string(which) + " curve: bpp must be positive and PSNR finite");
        }
    }
    std::sort(pts.begin(), pts.end(), [](const RDPoint& a, const RDPoint& b) { return a.psnr < b.psnr; });
    std::vector<double> x, y;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0 && pts[i].psnr == pts[i - 1].psnr) {
            throw BdRateError(std::string(which) + " curve: duplicate PSNR " + std::to_string(pts[i].psnr));
        }
        x.push_back(pts[i].psnr);
        y.push_back(std::log(pts[i].bpp));
    }
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (pts[i].bpp == pts[j].bpp) throw BdRateError(std::string(which) + " curve: duplicate bpp");
    return NaturalSpline(std::move(x), std::move(y));
}

} // namespace

double bd_rate(std::vector<RDPoint> anchor, std::vector<RDPoint> test) {
    const auto sa = curve_spline(std::move(anchor), "anchor");
    const auto st = curve_spline(std::move(test), "test");
    const double lo = std::max(sa.front(), st.front());
    const double hi = std::min(sa.back(), st.back());
    if (!(hi > lo)) throw BdRateError("bd_rate: PSNR ranges do not overlap");
    const double avg = (st.integral(lo, hi) - sa.integral(lo, hi)) / (hi - lo);
    return (std::exp(avg) - 1.0) * 100.0;
}

} // namespace uarnvc::media
