// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Normal-distribution helpers shared by the rate model and the entropy coder.
//
// Two families live here:
//  * accurate, libm-based evaluations used for training and rate estimates
//    (tail-stable logs of unit-bin masses);
//  * deterministic evaluations built from IEEE-754 basic operations only, used
//    to build coder frequency tables that must be identical on every platform.

#pragma once

namespace uarnvc::gauss {

double normal_cdf(double z);
// log(1 - Phi(z)), stable for large positive z.
double log_normal_sf(double z);
double log_normal_pdf(double z);

struct BinLogMass {
    double log_mass;    // log(Phi(b) - Phi(a)), natural log
    double d_log_mass;  // derivative w.r.t. the bin centre
};

// Mass of the unit bin [y - 1/2, y + 1/2] under N(mu, sigma^2), in log space.
BinLogMass bin_log_mass(double y, double mu, double sigma);

// -log2 of the unit-bin mass.
double bin_bits(double y, double mu, double sigma);

// exp(x) from a fixed range reduction and a fixed polynomial. Bit-identical on
// any IEEE-754 double implementation when compiled without FMA contraction.
double det_exp(double x);

// Phi(z) via Abramowitz & Stegun 26.2.17 on top of det_exp. Absolute error
// below 7.5e-8.
double det_normal_cdf(double z);
double det_normal_sf(double z);

// Phi(hi) - Phi(lo) from det_normal_sf, arranged so that mirrored bins
// ([lo,hi] vs [-hi,-lo]) produce bit-identical masses.
double det_bin_mass(double lo, double hi);

} // namespace uarnvc::gauss
