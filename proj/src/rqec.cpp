// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/rqec.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "uarnvc/error.hpp"
#include "uarnvc/gaussian.hpp"

namespace uarnvc::rqec {

SymbolRangeError::SymbolRangeError(std::string layer, std::int64_t max_abs)
    : std::range_error("quantize: layer '" + layer + "' has |symbol| up to " + std::to_string(max_abs) +
                       ", coder bound is " + std::to_string(kMaxBound)),
      layer_(std::move(layer)),
      max_abs_(max_abs) {}

QuantScale QuantScale::from_steps(const std::vector<double>& steps) {
    QuantScale q;
    for (double s : steps) {
        if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("quant scale: step must be positive and finite");
        q.steps_.push_back(s);
    }
    return q;
}

QuantScale QuantScale::from_log_steps(const std::vector<double>& log_steps) {
    std::vector<double> s;
    for (double l : log_steps) s.push_back(std::exp(l));
    return from_steps(s);
}

std::vector<double> QuantScale::log_steps() const {
    std::vector<double> l;
    for (double s : steps_) l.push_back(std::log(s));
    return l;
}

double round_half_away(double x) { return std::round(x); }

ParamVector residual(const ParamVector& theta_star, const ParamVector& theta_prime) {
    theta_star.require_same_layout(theta_prime, "residual");
    ParamVector out = theta_star.clone();
    for (std::size_t i = 0; i < out.segments(); ++i) {
        auto d = out[i].tensor.data();
        auto p = theta_prime[i].tensor.data();
        for (std::size_t j = 0; j < d.size(); ++j) d[j] -= p[j];
    }
    return out;
}

namespace {

void require_scales(const ParamVector& pv, const QuantScale& scales, const char* what) {
    if (scales.size() != pv.segments()) {
        throw std::invalid_argument(std::string(what) + ": " + std::to_string(scales.size()) + " scales for " +
                                    std::to_string(pv.segments()) + " layers");
    }
}

} // namespace

Symbols quantize(const ParamVector& delta, const QuantScale& scales) {
    require_scales(delta, scales, "quantize");
    Symbols out(delta.segments());
    for (std::size_t i = 0; i < delta.segments(); ++i) {
        const double s = scales.step(i);
        auto d = delta[i].tensor.data();
        auto& sym = out[i];
        sym.resize(d.size());
        double worst = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) {
            const double q = round_half_away(d[j] / s);
            worst = std::max(worst, std::abs(q));
            if (worst > kMaxBound) break;
            sym[j] = static_cast<std::int32_t>(q);
        }
        if (worst > kMaxBound) {
            double m = 0.0;
            for (double v : d) m = std::max(m, std::abs(round_half_away(v / s)));
            throw SymbolRangeError(delta[i].name, std::isfinite(m) ? static_cast<std::int64_t>(std::min(m, 9.0e18))
                                                                   : std::numeric_limits<std::int64_t>::max());
        }
    }
    return out;
}

ParamVector dequantize(const Symbols& symbols, const QuantScale& scales, const Layout& layout) {
    if (symbols.size() != layout.size() || scales.size() != layout.size()) {
        throw std::invalid_argument("dequantize: symbols/scales do not match the layout");
    }
    ParamVector out;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (symbols[i].size() != ad::numel(layout[i].shape)) {
            throw std::invalid_argument("dequantize: segment '" + layout[i].name + "' expects " +
                                        std::to_string(ad::numel(layout[i].shape)) + " symbols, got " +
                                        std::to_string(symbols[i].size()));
        }
        const double s = scales.step(i);
        std::vector<ad::Real> v(symbols[i].size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = static_cast<double>(symbols[i][j]) * s;
        out.add(layout[i].name, ad::Tensor::from(layout[i].shape, std::move(v)));
    }
    return out;
}

ParamVector snap_to_lattice(const ParamVector& theta_star, const ParamVector& theta_prime, const QuantScale& scales) {
    const auto delta = residual(theta_star, theta_prime);
    const auto deq = dequantize(quantize(delta, scales), scales, theta_prime.layout());
    ParamVector out = theta_prime.clone();
    for (std::size_t i = 0; i < out.segments(); ++i) {
        auto o = out[i].tensor.data();
        auto d = deq[i].tensor.data();
        for (std::size_t j = 0; j < o.size(); ++j) o[j] += d[j];
    }
    return out;
}

QuantScale initial_scales(const ParamVector& theta_prime) {
    std::vector<double> steps;
    for (const auto& seg : theta_prime) {
        double m = 0.0;
        for (double v : seg.tensor.data()) m = std::max(m, std::abs(v));
        steps.push_back(std::max(m, 1e-3) / kInitialLevels);
    }
    return QuantScale::from_steps(steps);
}

namespace {

LayerStat moments(double sum, double sum_sq, std::size_t n) {
    if (n == 0) return {};
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    return {mean, std::max(std::sqrt(var), kSigmaMin)};
}

} // namespace

LayerStats scaled_stats(const ParamVector& delta, const QuantScale& scales) {
    require_scales(delta, scales, "scaled_stats");
    LayerStats out;
    for (std::size_t i = 0; i < delta.segments(); ++i) {
        const double s = scales.step(i);
        auto d = delta[i].tensor.data();
        // Two-pass for accuracy; layers are small.
        double sum = 0.0;
        for (double v : d) sum += v / s;
        const double mean = d.empty() ? 0.0 : sum / static_cast<double>(d.size());
        double ss = 0.0;
        for (double v : d) ss += (v / s - mean) * (v / s - mean);
        const double sigma = d.empty() ? kSigmaMin : std::sqrt(ss / static_cast<double>(d.size()));
        out.push_back({mean, std::max(sigma, kSigmaMin)});
    }
    return out;
}

LayerStats symbol_stats(const Symbols& symbols) {
    LayerStats out;
    for (const auto& layer : symbols) {
        double sum = 0.0, sq = 0.0;
        for (auto k : layer) {
            sum += k;
            sq += static_cast<double>(k) * k;
        }
        out.push_back(moments(sum, sq, layer.size()));
    }
    return out;
}

LayerStats fit_symbol_stats(const Symbols& symbols) {
    LayerStats out = symbol_stats(symbols);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (symbols[i].empty()) continue;
        std::map<std::int32_t, std::size_t> hist;
        for (auto k : symbols[i]) ++hist[k];
        const double mu = out[i].mu;
        auto nll = [&](double log_sigma) {
            const double sigma = std::exp(log_sigma);
            double b = 0.0;
            for (const auto& [k, n] : hist) b += static_cast<double>(n) * gauss::bin_bits(static_cast<double>(k), mu, sigma);
            return b;
        };
        // Golden section in log sigma.
        double lo = std::log(kSigmaMin), hi = std::log(2.0 * out[i].sigma + 1.0);
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        double f1 = nll(x1), f2 = nll(x2);
        while (hi - lo > 1e-7) {
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = nll(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = nll(x2);
            }
        }
        out[i].sigma = std::max(std::exp(0.5 * (lo + hi)), kSigmaMin);
    }
    return out;
}

LayerStats round_to_f32(const LayerStats& stats) {
    LayerStats out;
    for (const auto& s : stats) {
        const float sigma = std::max(static_cast<float>(s.sigma), static_cast<float>(kSigmaMin));
        out.push_back({static_cast<double>(static_cast<float>(s.mu)), static_cast<double>(sigma)});
    }
    return out;
}

QuantScale round_to_f32(const QuantScale& scales) {
    std::vector<double> steps;
    for (double s : scales.steps()) steps.push_back(static_cast<double>(static_cast<float>(s)));
    QuantScale q = QuantScale::from_steps(steps);
    return q;
}

RateEstimate rate_eval(const Symbols& symbols, const LayerStats& stats) {
    if (symbols.size() != stats.size()) throw std::invalid_argument("rate_eval: stats do not match symbol layers");
    RateEstimate r;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const double sigma = std::max(stats[i].sigma, kSigmaMin);
        double bits = 0.0;
        for (auto k : symbols[i]) bits += gauss::bin_bits(static_cast<double>(k), stats[i].mu, sigma);
        if (!std::isfinite(bits)) throw NumericError("rate_eval: non-finite likelihood in layer " + std::to_string(i));
        r.per_layer.push_back(bits);
        r.total += bits;
    }
    return r;
}

RateEstimate rate_loss(const ParamVector& delta, const QuantScale& scales, const LayerStats& stats, RateMode mode,
                       Rng* noise) {
    require_scales(delta, scales, "rate_loss");
    if (stats.size() != delta.segments()) throw std::invalid_argument("rate_loss: stats do not match layers");
    if (mode == RateMode::eval) return rate_eval(quantize(delta, scales), stats);
    if (noise == nullptr) throw std::invalid_argument("rate_loss: train mode needs a noise source");
    RateEstimate r;
    for (std::size_t i = 0; i < delta.segments(); ++i) {
        const double s = scales.step(i);
        const double sigma = std::max(stats[i].sigma, kSigmaMin);
        double bits = 0.0;
        for (double v : delta[i].tensor.data()) bits += gauss::bin_bits(v / s + noise->uniform() - 0.5, stats[i].mu, sigma);
        if (!std::isfinite(bits)) throw NumericError("rate_loss: non-finite likelihood in layer '" + delta[i].name + "'");
        r.per_layer.push_back(bits);
        r.total += bits;
    }
    return r;
}

ad::Tensor rate_train(ad::Tape& tape, const std::vector<ad::Tensor>& scaled, const LayerStats& stats,
                      const std::vector<std::vector<double>>& noise) {
    if (scaled.size() != stats.size() || noise.size() != scaled.size()) {
        throw std::invalid_argument("rate_train: layers, stats and noise must align");
    }
    ad::Tensor total;
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        if (noise[i].size() != scaled[i].size()) throw std::invalid_argument("rate_train: noise size mismatch");
        const auto u = ad::Tensor::from(scaled[i].shape(), noise[i]);
        const double sigma = std::max(stats[i].sigma, kSigmaMin);
        ad::Tensor bits;
        try {
            bits = tape.gaussian_bits(tape.add(scaled[i], u), stats[i].mu, sigma);
        } catch (const std::domain_error& e) {
            throw NumericError("rate_train: layer " + std::to_string(i) + ": " + e.what());
        }
        total = total.defined() ? tape.add(total, bits) : bits;
    }
    return total.defined() ? total : ad::Tensor::scalar(0.0);
}

double lambda_preset(const std::string& name) {
    if (name == "hinerv") return 5.0;
    if (name == "hnerv") return 0.5;
    throw UsageError("unknown lambda preset '" + name + "' (hinerv, hnerv)");
}

double combined_loss(double frame_mse, const RateEstimate& rate, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("combined_loss: lambda must be positive");
    return rate.total + lambda * frame_mse;
}

ad::Tensor combined_loss(ad::Tape& tape, const ad::Tensor& frame_mse, const ad::Tensor& rate, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("combined_loss: lambda must be positive");
    return tape.add(rate, tape.mul(frame_mse, ad::Tensor::scalar(lambda)));
}

} // namespace uarnvc::rqec
