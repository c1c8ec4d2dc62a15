// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace uarnvc::gauss {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log Q(z) for z > 30 via the asymptotic Mills-ratio series.
double log_sf_asymptotic(double z) {
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - std::log(z) - kLogSqrt2Pi + std::log(series);
}

} // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double log_normal_sf(double z) {
    if (z > 30.0) return log_sf_asymptotic(z);
    if (z < -5.0) return std::log1p(-0.5 * std::erfc(-z * kInvSqrt2));
    return std::log(0.5 * std::erfc(z * kInvSqrt2));
}

double log_normal_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

BinLogMass bin_log_mass(double y, double mu, double sigma) {
    double a = (y - 0.5 - mu) / sigma;
    double b = (y + 0.5 - mu) / sigma;
    // d/dy log(Phi(b) - Phi(a)) = (phi(b) - phi(a)) / (sigma * mass)
    double sign = 1.0;
    if (b <= 0.0) {
        // Mirror into the upper tail; the derivative flips sign.
        const double na = -b;
        const double nb = -a;
        a = na;
        b = nb;
        sign = -1.0;
    }
    double log_mass;
    if (a >= 0.0) {
        const double lqa = log_normal_sf(a);
        const double lqb = log_normal_sf(b);
        log_mass = lqa + std::log(-std::expm1(lqb - lqa));
    } else {
        log_mass = std::log(0.5 * (std::erf(b * kInvSqrt2) - std::erf(a * kInvSqrt2)));
    }
    const double pb = std::exp(log_normal_pdf(b) - log_mass);
    const double pa = std::exp(log_normal_pdf(a) - log_mass);
    // In mirrored coordinates the bin edges swap roles: phi(-a) = phi(a).
    const double d = sign > 0 ? (pb - pa) : (pa - pb);
    return {log_mass, d / sigma};
}

double bin_bits(double y, double mu, double sigma) {
    return -bin_log_mass(y, mu, sigma).log_mass / std::numbers::ln2;
}

double det_exp(double x) {
    if (x != x) return x;
    if (x < -745.0) return 0.0;
    if (x > 709.0) return std::numeric_limits<double>::infinity();
    constexpr double kInvLn2 = 1.44269504088896338700;
    // ln2 split so that k * kLn2Hi is exact for |k| < 2^11.
    constexpr double kLn2Hi = 6.93147180369123816490e-01;
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    const double k = std::floor(x * kInvLn2 + 0.5);
    const double r = (x - k * kLn2Hi) - k * kLn2Lo;
    // Taylor series to degree 13; |r| <= 0.35 keeps the remainder below 1e-17.
    double p = 1.0 / 6227020800.0;
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    return std::ldexp(p, static_cast<int>(k));
}

double det_normal_sf(double z) {
    if (z < 0.0) return 1.0 - det_normal_sf(-z);
    constexpr double kP = 0.2316419;
    constexpr double kB1 = 0.319381530;
    constexpr double kB2 = -0.356563782;
    constexpr double kB3 = 1.781477937;
    constexpr double kB4 = -1.821255978;
    constexpr double kB5 = 1.330274429;
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const double t = 1.0 / (1.0 + kP * z);
    const double poly = t * (kB1 + t * (kB2 + t * (kB3 + t * (kB4 + t * kB5))));
    return kInvSqrt2Pi * det_exp(-0.5 * z * z) * poly;
}

double det_normal_cdf(double z) { return 1.0 - det_normal_sf(z); }

double det_bin_mass(double lo, double hi) {
    double m;
    if (lo >= 0.0) {
        m = det_normal_sf(lo) - det_normal_sf(hi);
    } else if (hi <= 0.0) {
        m = det_normal_sf(-hi) - det_normal_sf(-lo);
    } else {
        m = 1.0 - det_normal_sf(-lo) - det_normal_sf(hi);
    }
    return m > 0.0 ? m : 0.0;
}

} // namespace uarnvc::gauss
