// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Carry-less 32-bit range coder (Subbotin construction) over static
// discretized-Gaussian symbol models with 16-bit frequency totals.
//
// Frequency tables are built from det_bin_mass, which uses IEEE basic
// operations only, and every coder step is integer arithmetic, so payload
// bytes are identical across platforms.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uarnvc/rqec.hpp"

namespace uarnvc::ec {

inline constexpr unsigned kFreqBits = 16;
inline constexpr std::uint32_t kFreqTotal = 1u << kFreqBits;

class SymbolModel {
public:
    SymbolModel() = default;

    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    std::int32_t bound() const noexcept { return bound_; }

    std::uint32_t freq(std::int32_t symbol) const;
    std::uint32_t cum_low(std::int32_t symbol) const;
    // Symbol whose interval contains `target` in [0, kFreqTotal).
    std::int32_t lookup(std::uint32_t target) const;
    // -log2 of the renormalized probability.
    double bits(std::int32_t symbol) const;
    bool contains(std::int32_t symbol) const noexcept { return symbol >= -bound_ && symbol <= bound_; }

    const std::vector<std::uint32_t>& cumulative() const noexcept { return cum_; }

private:
    friend SymbolModel build_model(double mu, double sigma, std::int32_t bound);
    double mu_ = 0.0;
    double sigma_ = 1.0;
    std::int32_t bound_ = 0;
    std::vector<std::uint32_t> cum_;  // 2B+2 entries, cum_[0] = 0, back() = kFreqTotal
};

// Frequencies over [-B, B]: each symbol gets 1 + floor(p_k / S * (2^16 - n))
// where p_k is the unit-bin mass, S their sum and n = 2B+1; the leftover goes
// to the most probable symbol (lowest k on ties).
SymbolModel build_model(double mu, double sigma, std::int32_t bound);

class RangeEncoder {
public:
    void encode(std::uint32_t cum_low, std::uint32_t freq);
    std::vector<std::uint8_t> finish();

private:
    void shift();
    std::uint32_t low_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
    std::vector<std::uint8_t> out_;
};

class RangeDecoder {
public:
    explicit RangeDecoder(std::span<const std::uint8_t> in);
    std::uint32_t target();
    void consume(std::uint32_t cum_low, std::uint32_t freq);
    std::size_t position() const noexcept { return pos_; }

private:
    std::uint8_t next() { return pos_ < in_.size() ? in_[pos_++] : (++pos_, std::uint8_t{0}); }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
    std::uint32_t low_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
    std::uint32_t code_ = 0;
};

// Smallest bound covering the layer (at least 1).
std::int32_t layer_bound(std::span<const std::int32_t> symbols);

class EncodeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Layers are coded back to back in one stream. `names` (optional) label
// errors; out-of-bound symbols throw EncodeError naming layer and value.
std::vector<std::uint8_t> encode_symbols(const rqec::Symbols& symbols, const std::vector<SymbolModel>& models,
                                         const std::vector<std::string>& names = {});
rqec::Symbols decode_symbols(std::span<const std::uint8_t> payload, const std::vector<SymbolModel>& models,
                             const std::vector<std::size_t>& counts);

// Sum of -log2 p(symbol) under the renormalized models.
double model_bits(const rqec::Symbols& symbols, const std::vector<SymbolModel>& models);

} // namespace uarnvc::ec
