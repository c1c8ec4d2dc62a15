// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Residual quantization and entropy constraint.
//
// The coding target of a model is the residual delta = theta* - theta', split
// per layer. Each layer has a trainable step size s (stored as log s), the
// integer symbols are round_half_away(delta / s), and the rate of a layer is
// modelled by a Gaussian N(mu, sigma^2) convolved with U(-1/2, 1/2) evaluated
// in the scaled domain delta / s.

#pragma once

#include <cstdint>
#include <vector>

#include "uarnvc/param_vector.hpp"
#include "uarnvc/rng.hpp"

namespace uarnvc::rqec {

inline constexpr double kSigmaMin = 1e-6;
// Largest |symbol| the range coder accepts (alphabet [-B, B], 2B+1 <= 2^16).
inline constexpr std::int32_t kMaxBound = 32767;
// Initial step: max |theta'| of the layer spread over this many levels.
inline constexpr double kInitialLevels = 128.0;

// Step sizes are kept as plain values so that the decoder, which reads them
// from the header, never goes through exp/log. Training optimizes log steps.
struct QuantScale {
    static QuantScale from_steps(const std::vector<double>& steps);
    static QuantScale from_log_steps(const std::vector<double>& log_steps);
    std::size_t size() const noexcept { return steps_.size(); }
    double step(std::size_t layer) const { return steps_.at(layer); }
    const std::vector<double>& steps() const noexcept { return steps_; }
    std::vector<double> log_steps() const;
    bool operator==(const QuantScale&) const = default;

private:
    std::vector<double> steps_;
};

struct LayerStat {
    double mu = 0.0;
    double sigma = kSigmaMin;
    bool operator==(const LayerStat&) const = default;
};
using LayerStats = std::vector<LayerStat>;

struct RateEstimate {
    double total = 0.0;
    std::vector<double> per_layer;
};

using Symbols = std::vector<std::vector<std::int32_t>>;

class SymbolRangeError : public std::range_error {
public:
    SymbolRangeError(std::string layer, std::int64_t max_abs);
    const std::string& layer() const noexcept { return layer_; }
    std::int64_t max_abs() const noexcept { return max_abs_; }

private:
    std::string layer_;
    std::int64_t max_abs_;
};

enum class RateMode { train, eval };

double round_half_away(double x);

// theta_star - theta_prime; throws naming the first mismatching segment.
ParamVector residual(const ParamVector& theta_star, const ParamVector& theta_prime);

Symbols quantize(const ParamVector& delta, const QuantScale& scales);
ParamVector dequantize(const Symbols& symbols, const QuantScale& scales, const Layout& layout);

// theta' + dequantize(quantize(theta* - theta')).
ParamVector snap_to_lattice(const ParamVector& theta_star, const ParamVector& theta_prime, const QuantScale& scales);

// Step sizes so that max |theta'| of each layer spans kInitialLevels levels.
QuantScale initial_scales(const ParamVector& theta_prime);

// Per-layer mean / standard deviation of delta / s (sigma floored).
LayerStats scaled_stats(const ParamVector& delta, const QuantScale& scales);
LayerStats symbol_stats(const Symbols& symbols);
// Header statistics: mu is the symbol mean, sigma maximizes the likelihood of
// the symbols under the discretized Gaussian with that mu.
LayerStats fit_symbol_stats(const Symbols& symbols);

// Values as they are stored in the bitstream (32-bit reals).
LayerStats round_to_f32(const LayerStats& stats);
QuantScale round_to_f32(const QuantScale& scales);

// Eval mode: bits of the hard symbols under the discretized Gaussian.
RateEstimate rate_eval(const Symbols& symbols, const LayerStats& stats);

// Rate of `delta` under `stats`. Train mode perturbs delta/s with uniform
// noise from `noise`; eval mode quantizes first.
RateEstimate rate_loss(const ParamVector& delta, const QuantScale& scales, const LayerStats& stats, RateMode mode,
                       Rng* noise = nullptr);

// Differentiable train-mode rate: sum over layers of gaussian_bits(y + u).
// `scaled` are the per-layer tensors delta / s; `noise` aligned with them.
ad::Tensor rate_train(ad::Tape& tape, const std::vector<ad::Tensor>& scaled, const LayerStats& stats,
                      const std::vector<std::vector<double>>& noise);

// Loss = rate + lambda * distortion.
// Named distortion weights: "hinerv" = 5.0, "hnerv" = 0.5. Throws UsageError.
double lambda_preset(const std::string& name);

double combined_loss(double frame_mse, const RateEstimate& rate, double lambda);
ad::Tensor combined_loss(ad::Tape& tape, const ad::Tensor& frame_mse, const ad::Tensor& rate, double lambda);

} // namespace uarnvc::rqec
