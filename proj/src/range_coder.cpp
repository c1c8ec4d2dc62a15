// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uarnvc/gaussian.hpp"

namespace uarnvc::ec {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
constexpr std::uint32_t kBot = 1u << 16;
} // namespace

std::uint32_t SymbolModel::freq(std::int32_t s) const {
    const auto i = static_cast<std::size_t>(s + bound_);
    return cum_[i + 1] - cum_[i];
}

std::uint32_t SymbolModel::cum_low(std::int32_t s) const { return cum_[static_cast<std::size_t>(s + bound_)]; }

std::int32_t SymbolModel::lookup(std::uint32_t target) const {
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    return static_cast<std::int32_t>(it - cum_.begin() - 1) - bound_;
}

double SymbolModel::bits(std::int32_t s) const {
    return -std::log2(static_cast<double>(freq(s)) / static_cast<double>(kFreqTotal));
}

SymbolModel build_model(double mu, double sigma, std::int32_t bound) {
    if (bound < 1 || bound > rqec::kMaxBound) {
        throw std::invalid_argument("build_model: bound " + std::to_string(bound) + " outside [1, " +
                                    std::to_string(rqec::kMaxBound) + "]");
    }
    if (!(sigma > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("build_model: invalid mu/sigma");
    sigma = std::max(sigma, rqec::kSigmaMin);
    const std::size_t n = 2 * static_cast<std::size_t>(bound) + 1;
    std::vector<double> mass(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double k = static_cast<double>(static_cast<std::int64_t>(i) - bound);
        mass[i] = gauss::det_bin_mass((k - 0.5 - mu) / sigma, (k + 0.5 - mu) / sigma);
        total += mass[i];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        std::fill(mass.begin(), mass.end(), 1.0);
        total = static_cast<double>(n);
    }
    const double avail = static_cast<double>(kFreqTotal - n);
    std::vector<std::uint32_t> f(n);
    std::uint32_t used = 0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = 1 + static_cast<std::uint32_t>(std::floor(mass[i] / total * avail));
        used += f[i];
        if (mass[i] > mass[argmax]) argmax = i;
    }
    f[argmax] += kFreqTotal - used;

    SymbolModel m;
    m.mu_ = mu;
    m.sigma_ = sigma;
    m.bound_ = bound;
    m.cum_.resize(n + 1);
    m.cum_[0] = 0;
    for (std::size_t i = 0; i < n; ++i) m.cum_[i + 1] = m.cum_[i] + f[i];
    return m;
}

void RangeEncoder::encode(std::uint32_t cum_low, std::uint32_t freq) {
    range_ >>= kFreqBits;
    low_ += cum_low * range_;
    range_ *= freq;
    shift();
}

void RangeEncoder::shift() {
    while ((low_ ^ (low_ + range_)) < kTop || (range_ < kBot && ((range_ = (0u - low_) & (kBot - 1)), true))) {
        out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
        low_ <<= 8;
        range_ <<= 8;
    }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
    for (int i = 0; i < 4; ++i) {
        out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
        low_ <<= 8;
    }
    return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> in) : in_(in) {
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next();
}

std::uint32_t RangeDecoder::target() {
    range_ >>= kFreqBits;
    const std::uint32_t t = (code_ - low_) / range_;
    return std::min(t, kFreqTotal - 1);
}

void RangeDecoder::consume(std::uint32_t cum_low, std::uint32_t freq) {
    low_ += cum_low * range_;
    range_ *= freq;
    while ((low_ ^ (low_ + range_)) < kTop || (range_ < kBot && ((range_ = (0u - low_) & (kBot - 1)), true))) {
        code_ = (code_ << 8) | next();
        low_ <<= 8;
        range_ <<= 8;
    }
}

std::int32_t layer_bound(std::span<const std::int32_t> symbols) {
    std::int32_t b = 1;
    for (auto s : symbols) b = std::max(b, s < 0 ? -s : s);
    return b;
}

std::vector<std::uint8_t> encode_symbols(const rqec::Symbols& symbols, const std::vector<SymbolModel>& models,
                                         const std::vector<std::string>& names) {
    if (symbols.size() != models.size()) throw std::invalid_argument("encode_symbols: one model per layer required");
    RangeEncoder enc;
    for (std::size_t l = 0; l < symbols.size(); ++l) {
        const auto& m = models[l];
        for (auto s : symbols[l]) {
            if (!m.contains(s)) {
                const std::string layer = l < names.size() ? "'" + names[l] + "'" : std::to_string(l);
                throw EncodeError("encode_symbols: layer " + layer + " symbol " + std::to_string(s) +
                                  " outside bound " + std::to_string(m.bound()));
            }
            enc.encode(m.cum_low(s), m.freq(s));
        }
    }
    return enc.finish();
}

rqec::Symbols decode_symbols(std::span<const std::uint8_t> payload, const std::vector<SymbolModel>& models,
                             const std::vector<std::size_t>& counts) {
    if (counts.size() != models.size()) throw std::invalid_argument("decode_symbols: one count per model required");
    RangeDecoder dec(payload);
    rqec::Symbols out(models.size());
    for (std::size_t l = 0; l < models.size(); ++l) {
        const auto& m = models[l];
        out[l].resize(counts[l]);
        for (auto& s : out[l]) {
            s = m.lookup(dec.target());
            dec.consume(m.cum_low(s), m.freq(s));
        }
    }
    return out;
}

double model_bits(const rqec::Symbols& symbols, const std::vector<SymbolModel>& models) {
    if (symbols.size() != models.size()) throw std::invalid_argument("model_bits: one model per layer required");
    double bits = 0.0;
    for (std::size_t l = 0; l < symbols.size(); ++l)
        for (auto s : symbols[l]) bits += models[l].bits(s);
    return bits;
}

} // namespace uarnvc::ec
