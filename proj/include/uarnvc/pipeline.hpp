// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Encode / decode orchestration.
//
// The video is cut into GOPs of p frames, each fitted by one model instance.
// Runs of m consecutive models form a GOM. Model 0 of a GOM (I-model) starts
// from a seeded random draw; model k > 0 (P-model) starts from
//     theta'_k = eps_k * rand_k + (1 - eps_k) * theta*_{k-1}
// and only the quantized residual theta*_k - theta'_k is coded.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uarnvc/backbone.hpp"
#include "uarnvc/bitstream.hpp"
#include "uarnvc/frame.hpp"
#include "uarnvc/ii_init.hpp"
#include "uarnvc/media.hpp"
#include "uarnvc/rqec.hpp"

namespace uarnvc::pipe {

struct FrameRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const FrameRange&) const = default;
};

struct PartitionPlan {
    std::size_t frames = 0;
    std::size_t gop = 0;
    std::size_t gom = 0;
    std::vector<FrameRange> gops;  // frame ranges
    std::vector<FrameRange> goms;  // GOP index ranges

    std::size_t gom_of(std::size_t model) const;
    bool is_i_model(std::size_t model) const;
    FrameRange gom_frames(std::size_t g) const;
};

PartitionPlan partition(std::size_t frames, std::size_t gop, std::size_t gom);

// How P-models are initialized.
enum class InitMode { interpolate, duplicate, random };
std::string to_string(InitMode mode);
InitMode parse_init_mode(const std::string& name);

struct TrainConfig {
    int epochs_i = 200;
    int epochs_p = 100;
    double lr_i = 5e-3;
    double lr_p = 2e-3;
    double lambda = 1.0;
    double warmup_frac = 0.1;
    int batch_size = 1;
    std::uint64_t seed = 0;
    ii::EpsilonSchedule schedule = ii::default_schedule();
    InitMode init = InitMode::interpolate;
    // Diagnostics: when the number of completed epochs hits a listed value,
    // the MSE of the lattice-snapped model is recorded.
    std::vector<int> probe_epochs;
};

void validate(const TrainConfig& cfg);

// One line of the run log.
struct EpochLog {
    std::size_t model = 0;
    int epoch = 0;
    double loss_r = 0.0;  // mean over the epoch's steps
    double loss_d = 0.0;
    double lr = 0.0;
};

struct TrainedModel {
    ParamVector theta_star;  // snapped to the lattice around theta_prime
    rqec::QuantScale scales; // binary32-representable
    rqec::LayerStats stats;  // binary32-representable, of the symbols
    rqec::Symbols symbols;
    std::vector<std::int32_t> bounds;
    std::vector<EpochLog> log;
    double final_mse = 0.0;
    std::vector<std::pair<int, double>> probes;  // (epochs completed, MSE)
};

// Mean per-pixel MSE of the model's rendering of `frames` ([0,1] units).
double gop_mse(const inr::BackboneConfig& backbone, const ParamVector& params, const std::vector<Frame>& frames);

// Trains theta* from theta' over `frames` (one frame per step, sequential).
// Loss_r is the train-mode rate in bits per pixel of the GOP and Loss_d the
// frame MSE in 8-bit units, combined as Loss_r + lambda * Loss_d.
TrainedModel train_model(bs::Role role, const std::vector<Frame>& frames, const ParamVector& theta_prime,
                         const inr::BackboneConfig& backbone, const TrainConfig& cfg, std::size_t model_index);

// Per-model record of an encode.
struct ModelLog {
    std::size_t index = 0;
    bs::Role role = bs::Role::I;
    double epsilon = 0.0;
    double gap_mse = 0.0;
    std::size_t payload_bytes = 0;
    double estimated_bits = 0.0;  // eval-mode rate under the header stats
    double train_seconds = 0.0;
    double final_mse = 0.0;
    std::vector<std::pair<int, double>> probes;  // copied from TrainedModel
};

struct EncodeOptions {
    unsigned jobs = 1;
};

struct EncodeResult {
    std::vector<std::uint8_t> bitstream;
    std::vector<ModelLog> models;
    std::vector<EpochLog> epochs;
    std::vector<ParamVector> theta_star;
    std::vector<Frame> reconstruction;
    double bpp = 0.0;
    double psnr = 0.0;  // mean per-frame PSNR of the 8-bit reconstruction
    double seconds = 0.0;
};

EncodeResult encode_video(const media::RawVideo& video, const PartitionPlan& plan, const inr::BackboneConfig& backbone,
                          const TrainConfig& cfg, const EncodeOptions& opts = {});

struct DecodeResult {
    std::size_t width = 0;
    std::size_t height = 0;
    FrameRange frames;
    std::vector<Frame> reconstruction;
    std::vector<ParamVector> theta_star;  // models in decode order
};

// Full decode. Throws DataError for malformed streams.
DecodeResult decode_video(std::span<const std::uint8_t> bytes, unsigned jobs = 1);
// Reads only the header and the payloads of GOM `g`.
DecodeResult decode_gom(bs::ByteSource& src, std::size_t g);
std::size_t gom_count(bs::ByteSource& src);

// bits * 8 / (T * H * W)
double bits_per_pixel(std::size_t file_bytes, std::size_t frames, std::size_t height, std::size_t width);

// Values held while training one model: parameters, the largest activation of
// a forward pass and the resident GOP frames.
std::size_t training_memory_proxy(const inr::BackboneConfig& backbone, std::size_t gop);

} // namespace uarnvc::pipe
