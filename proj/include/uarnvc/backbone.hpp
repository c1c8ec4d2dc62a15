// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Per-GOP implicit models mapping a normalized timestamp to a full frame.
//
// nerv-lite:  PE(t) -> linear -> act -> linear -> act -> reshape [c0,h0,w0]
//             -> { upsample(r) -> conv3x3 -> act } per stage -> conv3x3 -> sigmoid
// coord-mlp:  per pixel PE(x) ++ PE(y) ++ PE(t) -> linear/act ... -> linear -> sigmoid
//
// PE(v) = [sin(2^j pi v), cos(2^j pi v)] for j = 0..F-1.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uarnvc/frame.hpp"
#include "uarnvc/param_vector.hpp"

namespace uarnvc::inr {

enum class BackboneKind { nerv_lite, coord_mlp };
enum class Activation { gelu, sin };
enum class Upsample { nearest, pixel_shuffle };

struct UpsampleStage {
    std::size_t scale = 2;
    std::size_t width = 8;
    bool operator==(const UpsampleStage&) const = default;
};

struct BackboneConfig {
    BackboneKind kind = BackboneKind::nerv_lite;
    std::size_t pe_freqs = 8;
    Activation activation = Activation::gelu;
    std::size_t out_h = 32;
    std::size_t out_w = 32;

    // nerv-lite
    std::size_t stem_width = 32;
    std::size_t base_c = 8;
    std::size_t base_h = 4;
    std::size_t base_w = 4;
    std::vector<UpsampleStage> stages;
    Upsample upsample = Upsample::nearest;

    // coord-mlp: hidden widths followed by the output width (3)
    std::vector<std::size_t> mlp_widths;

    bool operator==(const BackboneConfig&) const = default;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Throws ConfigError; upsample-chain problems name the stage index.
void validate(const BackboneConfig& cfg);

// Key-value text, one `key=value` per line, keys in a fixed order. The same
// bytes are embedded in the bitstream header.
std::string to_text(const BackboneConfig& cfg);
BackboneConfig parse_config(const std::string& text);

// Named presets for a given frame size. Throws ConfigError for unknown names
// or sizes the preset cannot tile.
BackboneConfig preset(const std::string& name, std::size_t height, std::size_t width);
std::vector<std::string> preset_names();

Layout param_layout(const BackboneConfig& cfg);

// Standard normal draws scaled by 1/sqrt(fan_in) per segment, from a fixed
// generator seeded with `seed`.
ParamVector init_random(const BackboneConfig& cfg, std::uint64_t seed);

// Records the forward pass on `tape`. `params` are aligned with
// param_layout(cfg). nerv-lite returns [1,3,H,W]; coord-mlp returns [H*W,3].
ad::Tensor forward(ad::Tape& tape, const BackboneConfig& cfg, const std::vector<ad::Tensor>& params, double t_norm);

// Arranges a frame in the layout produced by forward().
ad::Tensor target_tensor(const BackboneConfig& cfg, const Frame& frame);
Frame to_frame(const BackboneConfig& cfg, const ad::Tensor& output);

struct ModelInstance {
    BackboneConfig config;
    ParamVector params;
    std::uint64_t seed = 0;
};

Frame forward_frame(const ModelInstance& model, double t_norm);
Frame forward_frame(const BackboneConfig& cfg, const ParamVector& params, double t_norm);

// Index i in a GOP of length p maps to i / (p - 1); a single-frame GOP maps to 0.
double timestamp(std::size_t index, std::size_t gop_length);

// Parameters plus the largest activation tensor count of one forward pass.
std::size_t activation_count(const BackboneConfig& cfg);

} // namespace uarnvc::inr
