// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/media.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "uarnvc/error.hpp"
#include "uarnvc/rng.hpp"

namespace uarnvc::media {

RawVideo from_bytes(std::vector<std::uint8_t> bytes, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) throw UsageError("frame dimensions must be positive");
    const std::size_t fb = 3 * width * height;
    if (bytes.size() % fb != 0 || bytes.empty()) {
        const std::size_t want = std::max<std::size_t>(1, (bytes.size() + fb - 1) / fb) * fb;
        throw DataError("raw size mismatch: expected a multiple of " + std::to_string(fb) + " bytes (e.g. " +
                        std::to_string(want) + "), got " + std::to_string(bytes.size()));
    }
    RawVideo v;
    v.width = width;
    v.height = height;
    v.frames = bytes.size() / fb;
    v.data = std::move(bytes);
    return v;
}

RawVideo load_raw(const std::string& path, std::size_t width, std::size_t height) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    try {
        return from_bytes(std::move(bytes), width, height);
    } catch (const DataError& e) {
        throw DataError("'" + path + "': " + e.what());
    }
}

void save_raw(const std::string& path, const RawVideo& video) {
    if (video.data.size() != video.frame_bytes() * video.frames) {
        throw std::invalid_argument("save_raw: data length does not match dimensions");
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write '" + path + "'");
    f.write(reinterpret_cast<const char*>(video.data.data()), static_cast<std::streamsize>(video.data.size()));
    if (!f) throw DataError("write failed for '" + path + "'");
}

std::uint8_t to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::round(c * 255.0));
}

std::vector<Frame> normalize(const RawVideo& video) {
    std::vector<Frame> out;
    out.reserve(video.frames);
    for (std::size_t t = 0; t < video.frames; ++t) {
        Frame f(video.width, video.height);
        const std::uint8_t* src = video.frame(t);
        for (std::size_t i = 0; i < f.planes.size(); ++i) f.planes[i] = src[i] / 255.0;
        out.push_back(std::move(f));
    }
    return out;
}

RawVideo denormalize(const std::vector<Frame>& frames) {
    RawVideo v;
    if (frames.empty()) return v;
    v.width = frames[0].width;
    v.height = frames[0].height;
    v.frames = frames.size();
    v.data.reserve(v.frame_bytes() * v.frames);
    for (const auto& f : frames) {
        if (f.width != v.width || f.height != v.height) throw std::invalid_argument("denormalize: mixed frame sizes");
        for (double x : f.planes) v.data.push_back(to_byte(x));
    }
    return v;
}

SynthKind parse_synth_kind(const std::string& name) {
    if (name == "static") return SynthKind::static_scene;
    if (name == "moving-blob") return SynthKind::moving_blob;
    if (name == "moving-rect") return SynthKind::moving_rect;
    if (name == "noise-texture-pan") return SynthKind::noise_texture_pan;
    throw UsageError("unknown synthetic kind '" + name + "' (static, moving-blob, moving-rect, noise-texture-pan)");
}

std::string to_string(SynthKind kind) {
    switch (kind) {
    case SynthKind::static_scene: return "static";
    case SynthKind::moving_blob: return "moving-blob";
    case SynthKind::moving_rect: return "moving-rect";
    case SynthKind::noise_texture_pan: return "noise-texture-pan";
    }
    return "?";
}

namespace {

struct Rgb {
    double r, g, b;
};

// Periodic smooth texture: a few random low-frequency cosines per channel.
class Texture {
public:
    Texture(std::size_t w, std::size_t h, Rng& rng) : w_(static_cast<double>(w)), h_(static_cast<double>(h)) {
        for (auto& ch : waves_) {
            for (auto& wv : ch) {
                wv.kx = static_cast<double>(rng.next() % 4);
                wv.ky = static_cast<double>(rng.next() % 4);
                wv.phase = 2.0 * std::numbers::pi * rng.uniform();
                wv.amp = 0.08 + 0.12 * rng.uniform();
            }
        }
        for (auto& b : base_) b = 0.3 + 0.4 * rng.uniform();
    }

    double at(int c, double x, double y) const {
        double v = base_[c];
        for (const auto& wv : waves_[c]) {
            v += wv.amp * std::cos(2.0 * std::numbers::pi * (wv.kx * x / w_ + wv.ky * y / h_) + wv.phase);
        }
        return std::clamp(v, 0.0, 1.0);
    }

private:
    struct Wave {
        double kx, ky, phase, amp;
    };
    double w_, h_;
    Wave waves_[3][3];
    double base_[3];
};

// Shortest signed distance on a circle of length n.
double wrap_dist(double d, double n) {
    d = std::fmod(d, n);
    if (d < -n / 2) d += n;
    if (d >= n / 2) d -= n;
    return d;
}

} // namespace

RawVideo synth_video(SynthKind kind, std::size_t width, std::size_t height, std::size_t frames, double velocity,
                     std::uint64_t seed) {
    if (width == 0 || height == 0 || frames == 0) throw UsageError("synth: dimensions must be positive");
    if (!std::isfinite(velocity)) throw UsageError("synth: velocity must be finite");
    Rng rng(seed);
    const double W = static_cast<double>(width), H = static_cast<double>(height);
    const Texture tex(width, height, rng);
    const Rgb bg{0.15 + 0.2 * rng.uniform(), 0.15 + 0.2 * rng.uniform(), 0.15 + 0.2 * rng.uniform()};
    const Rgb fg{0.6 + 0.35 * rng.uniform(), 0.4 + 0.5 * rng.uniform(), 0.5 + 0.45 * rng.uniform()};
    const double cx = W * (0.25 + 0.5 * rng.uniform());
    const double cy = H * (0.25 + 0.5 * rng.uniform());
    const double radius = std::max(1.5, 0.18 * std::min(W, H));
    const double rw = std::max(2.0, std::round(0.3 * W)), rh = std::max(2.0, std::round(0.25 * H));

    RawVideo v;
    v.width = width;
    v.height = height;
    v.frames = frames;
    v.data.resize(v.frame_bytes() * frames);
    const double vel = kind == SynthKind::static_scene ? 0.0 : velocity;
    for (std::size_t t = 0; t < frames; ++t) {
        const double shift = vel * static_cast<double>(t);
        std::uint8_t* out = v.data.data() + t * v.frame_bytes();
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                // Source coordinate in the frame-0 scene.
                const double sx = static_cast<double>(x) - shift;
                const double fy = static_cast<double>(y);
                double px[3] = {0.0, 0.0, 0.0};
                switch (kind) {
                case SynthKind::static_scene: {
                    const double dx = sx - cx, dy = fy - cy;
                    const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
                    for (int c = 0; c < 3; ++c) {
                        const double f = c == 0 ? fg.r : c == 1 ? fg.g : fg.b;
                        px[c] = (1.0 - g) * tex.at(c, sx, fy) + g * f;
                    }
                    break;
                }
                case SynthKind::moving_blob: {
                    const double dx = wrap_dist(sx - cx, W), dy = fy - cy;
                    const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
                    px[0] = (1.0 - g) * bg.r + g * fg.r;
                    px[1] = (1.0 - g) * bg.g + g * fg.g;
                    px[2] = (1.0 - g) * bg.b + g * fg.b;
                    break;
                }
                case SynthKind::moving_rect: {
                    const double dx = wrap_dist(sx - cx, W), dy = fy - cy;
                    const bool in = std::abs(dx) * 2.0 < rw && std::abs(dy) * 2.0 < rh;
                    px[0] = in ? fg.r : bg.r;
                    px[1] = in ? fg.g : bg.g;
                    px[2] = in ? fg.b : bg.b;
                    break;
                }
                case SynthKind::noise_texture_pan:
                    for (int c = 0; c < 3; ++c) px[c] = tex.at(c, sx, fy);
                    break;
                }
                for (int c = 0; c < 3; ++c) out[(static_cast<std::size_t>(c) * height + y) * width + x] = to_byte(px[c]);
            }
        }
    }
    return v;
}

double frame_psnr(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
    std::uint64_t se = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
        se += static_cast<std::uint64_t>(d * d);
    }
    if (se == 0) return std::numeric_limits<double>::infinity();
    const double mse = static_cast<double>(se) / static_cast<double>(n);
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

PsnrReport psnr(const RawVideo& ref, const RawVideo& test) {
    if (ref.width != test.width || ref.height != test.height || ref.frames != test.frames) {
        throw DataError("psnr: dimension mismatch " + std::to_string(ref.width) + "x" + std::to_string(ref.height) +
                        "x" + std::to_string(ref.frames) + " vs " + std::to_string(test.width) + "x" +
                        std::to_string(test.height) + "x" + std::to_string(test.frames));
    }
    PsnrReport r;
    double sum = 0.0;
    for (std::size_t t = 0; t < ref.frames; ++t) {
        const double p = frame_psnr(ref.frame(t), test.frame(t), ref.frame_bytes());
        r.per_frame.push_back(p);
        sum += p;
    }
    r.mean = ref.frames ? sum / static_cast<double>(ref.frames) : 0.0;
    return r;
}

} // namespace uarnvc::media
