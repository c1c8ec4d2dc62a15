// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "uarnvc/range_coder.hpp"
#include "uarnvc/rng.hpp"
#include "uarnvc/rqec.hpp"

using namespace uarnvc;
using namespace uarnvc::ec;

namespace {

// Inverse-CDF sampling from the model's own frequency table.
std::vector<std::int32_t> sample(const SymbolModel& m, std::size_t n, std::uint64_t seed) {
    Rng r(seed);
    std::vector<std::int32_t> out(n);
    for (auto& s : out) s = m.lookup(static_cast<std::uint32_t>(r.next() >> 48));
    return out;
}

double entropy_bits(const SymbolModel& m) {
    double h = 0.0;
    for (std::int32_t k = -m.bound(); k <= m.bound(); ++k) {
        const double p = static_cast<double>(m.freq(k)) / kFreqTotal;
        h -= p * std::log2(p);
    }
    return h;
}

} // namespace

TEST(RangeCoder, SymmetricTableAtZeroMean) {
    for (double sigma : {0.3, 1.0, 5.0}) {
        const auto m = build_model(0.0, sigma, 20);
        for (std::int32_t k = 1; k <= 20; ++k) EXPECT_EQ(m.freq(k), m.freq(-k)) << sigma << " " << k;
    }
}

TEST(RangeCoder, DegenerateSigmaConcentrates) {
    const std::int32_t B = 10;
    const auto m = build_model(0.0, rqec::kSigmaMin, B);
    EXPECT_GE(m.freq(0), kFreqTotal - 2u * B);
    for (std::int32_t k = -B; k <= B; ++k) EXPECT_GE(m.freq(k), 1u);
    EXPECT_EQ(m.cumulative().back(), kFreqTotal);
}

TEST(RangeCoder, ZeroSymbolBits) {
    const auto m = build_model(0.0, 1.0, 8);
    EXPECT_NEAR(m.bits(0), oracle::bin_bits(0, 0, 1), 1e-3);
    EXPECT_NEAR(m.bits(0), 1.3848, 1e-3);
}

TEST(RangeCoder, EmptyStream) {
    const auto m = build_model(0.0, 1.0, 4);
    const auto bytes = encode_symbols({{}}, {m});
    EXPECT_LE(bytes.size(), 4u);
    const auto back = decode_symbols(bytes, {m}, {0});
    ASSERT_EQ(back.size(), 1u);
    EXPECT_TRUE(back[0].empty());
}

TEST(RangeCoder, SampledRoundTripNearEntropy) {
    Rng r(1);
    for (int trial = 0; trial < 6; ++trial) {
        const double mu = 3.0 * (r.uniform() - 0.5);
        const double sigma = 0.2 + 6.0 * r.uniform();
        const auto m = build_model(mu, sigma, 40);
        const rqec::Symbols s{sample(m, 10000, 100 + trial)};
        const auto bytes = encode_symbols(s, {m});
        EXPECT_EQ(decode_symbols(bytes, {m}, {10000}), s);
        const double measured = 8.0 * static_cast<double>(bytes.size()) / 10000.0;
        const double h = entropy_bits(m);
        EXPECT_LE(std::abs(measured - h), 0.02 * h + 1e-3) << "mu " << mu << " sigma " << sigma;
    }
}

TEST(RangeCoder, MultiLayerRoundTrip) {
    Rng r(2);
    std::vector<SymbolModel> models;
    rqec::Symbols s;
    std::vector<std::size_t> counts;
    for (int l = 0; l < 5; ++l) {
        models.push_back(build_model(r.uniform() - 0.5, 0.1 + 3 * r.uniform(), 1 + l * 7));
        s.push_back(sample(models.back(), 100 + 37 * l, 50 + l));
        counts.push_back(s.back().size());
    }
    EXPECT_EQ(decode_symbols(encode_symbols(s, models), models, counts), s);
}

TEST(RangeCoder, ZerosUnderDegenerateModelAreCheap) {
    const auto m = build_model(0.0, rqec::kSigmaMin, 1);
    const rqec::Symbols s{std::vector<std::int32_t>(5000, 0)};
    const auto bytes = encode_symbols(s, {m});
    EXPECT_LT(8.0 * static_cast<double>(bytes.size()), 0.1 * 5000);
    EXPECT_EQ(decode_symbols(bytes, {m}, {5000}), s);
}

TEST(RangeCoder, RejectsSymbolOutsideBound) {
    const auto m = build_model(0.0, 1.0, 3);
    EXPECT_THROW(encode_symbols({{0, 4}}, {m}), EncodeError);
    EXPECT_THROW(build_model(0.0, 1.0, 0), std::invalid_argument);
}

TEST(RangeCoder, CorruptedPayloadDoesNotCrash) {
    const auto m = build_model(0.0, 2.0, 12);
    const rqec::Symbols s{sample(m, 500, 7)};
    auto bytes = encode_symbols(s, {m});
    Rng r(3);
    for (int i = 0; i < 50; ++i) {
        auto b = bytes;
        b[r.next() % b.size()] ^= static_cast<std::uint8_t>(1 + r.next() % 255);
        try {
            const auto d = decode_symbols(b, {m}, {500});
            ASSERT_EQ(d[0].size(), 500u);
            for (auto k : d[0]) ASSERT_TRUE(m.contains(k));
        } catch (const std::exception&) {
        }
    }
    // Truncation.
    bytes.resize(bytes.size() / 2);
    try {
        decode_symbols(bytes, {m}, {500});
    } catch (const std::exception&) {
    }
}

TEST(RangeCoder, LayerBound) {
    const std::vector<std::int32_t> s{0, -5, 3};
    EXPECT_EQ(layer_bound(s), 5);
    EXPECT_EQ(layer_bound(std::vector<std::int32_t>{0, 0}), 1);
}
