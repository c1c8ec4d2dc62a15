// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Raw planar RGB8 video, synthetic test sequences and PSNR.
//
// File layout: frames back to back; each frame is the R plane, then G, then B,
// each plane H rows of W bytes. Length = 3 * W * H * T.

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "uarnvc/frame.hpp"

namespace uarnvc::media {

struct RawVideo {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t frames = 0;
    std::vector<std::uint8_t> data;

    std::size_t frame_bytes() const noexcept { return 3 * width * height; }
    const std::uint8_t* frame(std::size_t t) const { return data.data() + t * frame_bytes(); }
    bool operator==(const RawVideo&) const = default;
};

// T is inferred from the file length; throws DataError on size mismatch.
RawVideo load_raw(const std::string& path, std::size_t width, std::size_t height);
void save_raw(const std::string& path, const RawVideo& video);
RawVideo from_bytes(std::vector<std::uint8_t> bytes, std::size_t width, std::size_t height);

// v / 255 and round(clamp(v, 0, 1) * 255).
std::vector<Frame> normalize(const RawVideo& video);
RawVideo denormalize(const std::vector<Frame>& frames);
std::uint8_t to_byte(double v);

enum class SynthKind { static_scene, moving_blob, moving_rect, noise_texture_pan };
SynthKind parse_synth_kind(const std::string& name);
std::string to_string(SynthKind kind);

// Deterministic in all arguments. Motion wraps around the frame, so with an
// integer velocity frame t+1 is frame t shifted right by `velocity` pixels.
RawVideo synth_video(SynthKind kind, std::size_t width, std::size_t height, std::size_t frames, double velocity,
                     std::uint64_t seed);

inline constexpr double kPsnrCap = 100.0;

struct PsnrReport {
    std::vector<double> per_frame;  // +inf for identical frames
    double mean = 0.0;              // mean of per_frame
};

double frame_psnr(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);
PsnrReport psnr(const RawVideo& ref, const RawVideo& test);
// Value written to CSV reports.
inline double capped(double db) { return db > kPsnrCap ? kPsnrCap : db; }

} // namespace uarnvc::media
