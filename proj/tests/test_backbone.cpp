// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "uarnvc/backbone.hpp"
#include "uarnvc/optim.hpp"

using namespace uarnvc;
using namespace uarnvc::inr;

namespace {

BackboneConfig small_nerv(Upsample up, Activation act) {
    BackboneConfig c;
    c.kind = BackboneKind::nerv_lite;
    c.pe_freqs = 3;
    c.activation = act;
    c.out_h = 8;
    c.out_w = 8;
    c.stem_width = 6;
    c.base_c = 3;
    c.base_h = 2;
    c.base_w = 2;
    c.stages = {{2, 3}, {2, 3}};
    c.upsample = up;
    return c;
}

double frame_loss(const BackboneConfig& cfg, const Layout& layout, const std::vector<double>& flat,
                  const ad::Tensor& target, double t) {
    ParamVector p = ParamVector::zeros(layout);
    p.assign_flat(flat);
    ad::Tape tape;
    return tape.mean_square(tape.sub(forward(tape, cfg, p.tensors(), t), target)).item();
}

void check_backbone_gradient(const BackboneConfig& cfg, std::uint64_t seed) {
    const auto layout = param_layout(cfg);
    ParamVector p = init_random(cfg, seed);
    Frame target(cfg.out_w, cfg.out_h);
    for (std::size_t i = 0; i < target.planes.size(); ++i) target.planes[i] = 0.5 + 0.4 * std::sin(0.37 * i);
    const auto tt = target_tensor(cfg, target);
    p.set_requires_grad(true);
    ad::Tape tape;
    auto loss = tape.mean_square(tape.sub(forward(tape, cfg, p.tensors(), 0.3), tt));
    const auto grads = backward(tape, loss, p);
    std::vector<double> analytic;
    for (const auto& g : grads) analytic.insert(analytic.end(), g.begin(), g.end());

    const auto flat = p.flatten();
    const auto fd = oracle::fd_gradient([&](const std::vector<double>& x) { return frame_loss(cfg, layout, x, tt, 0.3); },
                                        flat, 1e-5);
    ASSERT_EQ(fd.size(), analytic.size());
    for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_LT(oracle::rel_err(analytic[i], fd[i], 1e-7), 1e-4) << i;
}

} // namespace

TEST(Backbone, LayoutDeterministic) {
    const auto c = preset("nerv-tiny", 32, 32);
    EXPECT_EQ(param_layout(c), param_layout(c));
}

TEST(Backbone, CoordMlpSegments) {
    BackboneConfig c;
    c.kind = BackboneKind::coord_mlp;
    c.pe_freqs = 4;
    c.mlp_widths = {64, 64, 3};
    const auto l = param_layout(c);
    ASSERT_EQ(l.size(), 6u);
    int weights = 0, biases = 0;
    for (const auto& s : l) (s.name.ends_with(".weight") ? weights : biases)++;
    EXPECT_EQ(weights, 3);
    EXPECT_EQ(biases, 3);
}

TEST(Backbone, NervSegments) {
    auto c = small_nerv(Upsample::nearest, Activation::gelu);
    const auto l = param_layout(c);
    // stem: 2 linear layers, 2 conv stages, conv head; weight + bias each
    ASSERT_EQ(l.size(), 10u);
    EXPECT_EQ(l[0].name, "stem.0.weight");
    EXPECT_EQ(l[4].name, "stage.0.weight");
    EXPECT_EQ(l[6].name, "stage.1.weight");
    EXPECT_EQ(l[8].name, "head.weight");
}

TEST(Backbone, InitDeterministicAndSeedSensitive) {
    const auto c = preset("nerv-tiny", 32, 32);
    const auto a = init_random(c, 5), b = init_random(c, 5), d = init_random(c, 6);
    EXPECT_TRUE(a == b);
    const auto fa = a.flatten(), fd = d.flatten();
    std::size_t differ = 0;
    for (std::size_t i = 0; i < fa.size(); ++i) differ += fa[i] != fd[i];
    EXPECT_GE(static_cast<double>(differ), 0.99 * static_cast<double>(fa.size()));
}

TEST(Backbone, InvalidConfigsRejected) {
    auto c = small_nerv(Upsample::nearest, Activation::gelu);
    c.stages.clear();
    EXPECT_THROW(validate(c), ConfigError);
    EXPECT_THROW(init_random(c, 1), ConfigError);
    auto d = small_nerv(Upsample::nearest, Activation::gelu);
    d.stages[1].scale = 4;
    try {
        validate(d);
        FAIL() << "overshooting stage accepted";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("stage 1"), std::string::npos) << e.what();
    }
    EXPECT_THROW(preset("nerv-tiny", 30, 32), ConfigError);
    EXPECT_THROW(preset("no-such", 32, 32), ConfigError);
}

TEST(Backbone, ConfigTextRoundTrip) {
    for (const auto& name : preset_names()) {
        const auto c = preset(name, 32, 32);
        EXPECT_EQ(parse_config(to_text(c)), c) << name;
    }
    const auto ps = small_nerv(Upsample::pixel_shuffle, Activation::sin);
    EXPECT_EQ(parse_config(to_text(ps)), ps);
    EXPECT_THROW(parse_config("kind=nerv-lite\n"), ConfigError);
    EXPECT_THROW(parse_config(to_text(ps) + "extra=1\n"), ConfigError);
}

TEST(Backbone, FrameShapeRangeAndDeterminism) {
    const auto c = preset("nerv-tiny", 32, 32);
    const auto p = init_random(c, 3);
    const auto f = forward_frame(c, p, 0.25);
    EXPECT_EQ(f.width, 32u);
    EXPECT_EQ(f.height, 32u);
    EXPECT_EQ(f.planes.size(), 3u * 32 * 32);
    for (double v : f.planes) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(f, forward_frame(c, p, 0.25));
    const auto m = preset("coord-mlp-small", 16, 16);
    const auto g = forward_frame(m, init_random(m, 1), 0.0);
    EXPECT_EQ(g.planes.size(), 3u * 16 * 16);
}

TEST(Backbone, Timestamps) {
    EXPECT_EQ(timestamp(0, 1), 0.0);
    EXPECT_EQ(timestamp(0, 5), 0.0);
    EXPECT_EQ(timestamp(4, 5), 1.0);
    EXPECT_EQ(timestamp(2, 5), 0.5);
}

TEST(Backbone, GradientNervNearest) { check_backbone_gradient(small_nerv(Upsample::nearest, Activation::gelu), 1); }
TEST(Backbone, GradientNervPixelShuffleSin) {
    check_backbone_gradient(small_nerv(Upsample::pixel_shuffle, Activation::sin), 2);
}
TEST(Backbone, GradientCoordMlp) {
    BackboneConfig c;
    c.kind = BackboneKind::coord_mlp;
    c.pe_freqs = 2;
    c.out_h = 4;
    c.out_w = 4;
    c.mlp_widths = {8, 3};
    check_backbone_gradient(c, 3);
}

TEST(Backbone, ActivationCountGrowsWithFrame) {
    EXPECT_LT(activation_count(preset("nerv-tiny", 32, 32)), activation_count(preset("nerv-tiny", 64, 64)));
}
