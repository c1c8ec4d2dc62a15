// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "uarnvc/error.hpp"
#include "uarnvc/optim.hpp"
#include "uarnvc/range_coder.hpp"
#include "uarnvc/rng.hpp"

namespace uarnvc::pipe {

// ---------------------------------------------------------------------------
// Partitioning

PartitionPlan partition(std::size_t frames, std::size_t gop, std::size_t gom) {
    if (frames == 0 || gop == 0 || gom == 0) throw UsageError("partition: T, p and m must be at least 1");
    PartitionPlan plan;
    plan.frames = frames;
    plan.gop = gop;
    plan.gom = gom;
    for (std::size_t b = 0; b < frames; b += gop) plan.gops.push_back({b, std::min(frames, b + gop)});
    for (std::size_t b = 0; b < plan.gops.size(); b += gom) plan.goms.push_back({b, std::min(plan.gops.size(), b + gom)});
    return plan;
}

std::size_t PartitionPlan::gom_of(std::size_t model) const {
    if (model >= gops.size()) throw std::out_of_range("gom_of: model index out of range");
    return model / gom;
}

bool PartitionPlan::is_i_model(std::size_t model) const { return model % gom == 0; }

FrameRange PartitionPlan::gom_frames(std::size_t g) const {
    const auto& r = goms.at(g);
    return {gops[r.begin].begin, gops[r.end - 1].end};
}

std::string to_string(InitMode mode) {
    switch (mode) {
    case InitMode::interpolate: return "interpolate";
    case InitMode::duplicate: return "duplicate";
    case InitMode::random: return "random";
    }
    return "?";
}

InitMode parse_init_mode(const std::string& name) {
    if (name == "interpolate" || name == "ii") return InitMode::interpolate;
    if (name == "duplicate" || name == "d") return InitMode::duplicate;
    if (name == "random" || name == "r") return InitMode::random;
    throw UsageError("unknown init mode '" + name + "' (interpolate, duplicate, random)");
}

void validate(const TrainConfig& c) {
    if (c.epochs_i < 0 || c.epochs_p < 0) throw UsageError("epochs must be non-negative");
    if (!(c.lr_i > 0.0) || !(c.lr_p > 0.0)) throw UsageError("learning rates must be positive");
    if (!(c.lambda > 0.0) || !std::isfinite(c.lambda)) throw UsageError("lambda must be positive");
    if (!(c.warmup_frac > 0.0 && c.warmup_frac < 1.0)) throw UsageError("warmup fraction must lie in (0, 1)");
    if (c.batch_size != 1) throw UsageError("batch size must be 1");
    if (!(c.schedule.a > 0.0) || !(c.schedule.b >= 0.0) || !std::isfinite(c.schedule.a * std::exp(c.schedule.c)))
        throw UsageError("epsilon schedule needs a > 0, b >= 0 and finite a * exp(c)");
}

double bits_per_pixel(std::size_t file_bytes, std::size_t frames, std::size_t height, std::size_t width) {
    return static_cast<double>(file_bytes) * 8.0 / static_cast<double>(frames * height * width);
}

std::size_t training_memory_proxy(const inr::BackboneConfig& backbone, std::size_t gop) {
    return inr::activation_count(backbone) + gop * 3 * backbone.out_h * backbone.out_w;
}

// ---------------------------------------------------------------------------
// Training

namespace {

constexpr double kPixelScale = 255.0 * 255.0;
constexpr std::uint64_t kNoiseSalt = 0x6E6F697365ull;

// Per-layer mean / std of the scaled residual values, sigma floored.
rqec::LayerStat stat_of(std::span<const double> y) {
    if (y.empty()) return {};
    double sum = 0.0;
    for (double v : y) sum += v;
    const double mean = sum / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    return {mean, std::max(std::sqrt(ss / static_cast<double>(y.size())), rqec::kSigmaMin)};
}

} // namespace

double gop_mse(const inr::BackboneConfig& backbone, const ParamVector& params, const std::vector<Frame>& frames) {
    double se = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame f = inr::forward_frame(backbone, params, inr::timestamp(i, frames.size()));
        for (std::size_t j = 0; j < f.planes.size(); ++j) {
            const double d = f.planes[j] - frames[i].planes[j];
            se += d * d;
        }
    }
    return se / (static_cast<double>(frames.size()) * static_cast<double>(frames[0].planes.size()));
}

TrainedModel train_model(bs::Role role, const std::vector<Frame>& frames, const ParamVector& theta_prime,
                         const inr::BackboneConfig& backbone, const TrainConfig& cfg, std::size_t model_index) {
    validate(cfg);
    if (frames.empty()) throw std::invalid_argument("train_model: empty GOP");
    const Layout layout = inr::param_layout(backbone);
    ParamVector::zeros(layout).require_same_layout(theta_prime, "train_model");

    const int epochs = role == bs::Role::I ? cfg.epochs_i : cfg.epochs_p;
    const double base_lr = role == bs::Role::I ? cfg.lr_i : cfg.lr_p;
    const std::size_t L = layout.size();
    const double pixels = static_cast<double>(frames.size() * frames[0].width * frames[0].height);

    ParamVector theta = theta_prime.clone();
    const auto init_scales = rqec::initial_scales(theta_prime);
    ParamVector log_step;
    for (std::size_t l = 0; l < L; ++l) {
        log_step.add(layout[l].name + ".log_step", ad::Tensor::scalar(std::log(init_scales.step(l))));
    }
    // One optimizer over parameters and log steps; the vector aliases both.
    ParamVector trainable;
    for (const auto& s : theta) trainable.add(s.name, s.tensor);
    for (const auto& s : log_step) trainable.add(s.name, s.tensor);
    trainable.set_requires_grad(true);
    auto opt = OptimizerState::for_params(trainable);

    std::vector<ad::Tensor> targets;
    for (const auto& f : frames) targets.push_back(inr::target_tensor(backbone, f));
    const auto primes = theta_prime.tensors();

    Rng noise(model_seed(cfg.seed, model_index) ^ splitmix64(kNoiseSalt));
    TrainedModel out;
    std::vector<std::vector<double>> u(L);
    for (std::size_t l = 0; l < L; ++l) u[l].resize(primes[l].size());

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double lr = lr_at(epoch, epochs, base_lr, cfg.warmup_frac);
        double sum_r = 0.0, sum_d = 0.0;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto where = [&] {
                return "model " + std::to_string(model_index) + " epoch " + std::to_string(epoch) + " step " +
                       std::to_string(i);
            };
            try {
                ad::Tape tape;
                std::vector<ad::Tensor> eff(L), scaled(L);
                rqec::LayerStats stats(L);
                for (std::size_t l = 0; l < L; ++l) {
                    const auto s = tape.exp(log_step[l].tensor);
                    scaled[l] = tape.div(tape.sub(theta[l].tensor, primes[l]), s);
                    eff[l] = tape.add(primes[l], tape.mul(tape.ste_round(scaled[l]), s));
                    stats[l] = stat_of(scaled[l].data());
                    for (auto& v : u[l]) v = noise.uniform() - 0.5;
                }
                const auto recon = inr::forward(tape, backbone, eff, inr::timestamp(i, frames.size()));
                const auto mse = tape.mean_square(tape.sub(recon, targets[i]));
                const auto bits = rqec::rate_train(tape, scaled, stats, u);
                const auto loss_r = tape.mul(bits, ad::Tensor::scalar(1.0 / pixels));
                const auto loss_d = tape.mul(mse, ad::Tensor::scalar(kPixelScale));
                const auto loss = rqec::combined_loss(tape, loss_d, loss_r, cfg.lambda);
                if (!std::isfinite(loss.item())) throw NumericError("non-finite loss");
                const auto grads = backward(tape, loss, trainable);
                adam_step(trainable, grads, opt, lr);
                sum_r += loss_r.item();
                sum_d += loss_d.item();
            } catch (const NumericError& e) {
                throw NumericError("training diverged: " + where() + ": " + e.what());
            }
        }
        const double n = static_cast<double>(frames.size());
        out.log.push_back({model_index, epoch, sum_r / n, sum_d / n, lr});
        if (std::find(cfg.probe_epochs.begin(), cfg.probe_epochs.end(), epoch + 1) != cfg.probe_epochs.end()) {
            std::vector<double> st;
            for (std::size_t l = 0; l < L; ++l) st.push_back(std::exp(log_step[l].tensor.item()));
            const auto snapped = rqec::snap_to_lattice(theta, theta_prime, rqec::QuantScale::from_steps(st));
            out.probes.emplace_back(epoch + 1, gop_mse(backbone, snapped, frames));
        }
    }

    std::vector<double> steps;
    for (std::size_t l = 0; l < L; ++l) steps.push_back(std::exp(log_step[l].tensor.item()));
    out.scales = rqec::round_to_f32(rqec::QuantScale::from_steps(steps));
    const auto delta = rqec::residual(theta, theta_prime);
    out.symbols = rqec::quantize(delta, out.scales);
    out.theta_star = rqec::snap_to_lattice(theta, theta_prime, out.scales);
    out.stats = rqec::round_to_f32(rqec::fit_symbol_stats(out.symbols));
    for (const auto& s : out.symbols) out.bounds.push_back(ec::layer_bound(s));

    out.final_mse = gop_mse(backbone, out.theta_star, frames);
    return out;
}

// ---------------------------------------------------------------------------
// Encode

namespace {

std::vector<ec::SymbolModel> symbol_models(const bs::ModelRecord& rec) {
    std::vector<ec::SymbolModel> m;
    for (const auto& l : rec.layers) {
        m.push_back(ec::build_model(static_cast<double>(l.mu), static_cast<double>(l.sigma), static_cast<std::int32_t>(l.bound)));
    }
    return m;
}

rqec::QuantScale record_scales(const bs::ModelRecord& rec) {
    std::vector<double> s;
    for (const auto& l : rec.layers) s.push_back(static_cast<double>(l.step));
    return rqec::QuantScale::from_steps(s);
}

struct ModelOutput {
    bs::ModelRecord record;
    std::vector<std::uint8_t> payload;
    ModelLog log;
    std::vector<EpochLog> epochs;
    ParamVector theta_star;
};

double epsilon_f32(double e) { return static_cast<double>(static_cast<float>(e)); }

std::vector<ModelOutput> encode_gom(const std::vector<Frame>& frames, const PartitionPlan& plan, std::size_t g,
                                    const inr::BackboneConfig& backbone, const TrainConfig& cfg) {
    const auto layout = inr::param_layout(backbone);
    std::vector<std::string> names;
    for (const auto& s : layout) names.push_back(s.name);
    std::vector<ModelOutput> out;
    const auto& gom = plan.goms[g];
    for (std::size_t k = gom.begin; k < gom.end; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& r = plan.gops[k];
        std::vector<Frame> gop(frames.begin() + static_cast<std::ptrdiff_t>(r.begin),
                               frames.begin() + static_cast<std::ptrdiff_t>(r.end));
        ModelOutput mo;
        mo.log.index = k;
        ParamVector rand_k = inr::init_random(backbone, model_seed(cfg.seed, k));
        ParamVector theta_prime;
        bs::Role role = bs::Role::I;
        if (k == gom.begin) {
            theta_prime = std::move(rand_k);
        } else {
            role = bs::Role::P;
            const auto& pr = plan.gops[k - 1];
            const std::span<const Frame> prev(frames.data() + pr.begin, pr.size());
            const std::span<const Frame> cur(frames.data() + r.begin, r.size());
            const auto gap = ii::gop_gap_mse(prev, cur);
            double eps = 0.0;
            switch (cfg.init) {
            case InitMode::interpolate: eps = ii::epsilon_for(gap, cfg.schedule); break;
            case InitMode::duplicate: eps = 0.0; break;
            case InitMode::random: eps = 1.0; break;
            }
            eps = epsilon_f32(eps);
            mo.log.gap_mse = gap.mse;
            mo.log.epsilon = eps;
            theta_prime = ii::interpolate_init(rand_k, out.back().theta_star, eps);
        }
        mo.log.role = role;
        auto tm = train_model(role, gop, theta_prime, backbone, cfg, k);

        mo.record.index = static_cast<std::uint32_t>(k);
        mo.record.role = role;
        mo.record.epsilon = static_cast<float>(mo.log.epsilon);
        for (std::size_t l = 0; l < layout.size(); ++l) {
            mo.record.layers.push_back({static_cast<float>(tm.scales.step(l)), static_cast<float>(tm.stats[l].mu),
                                        static_cast<float>(tm.stats[l].sigma),
                                        static_cast<std::uint16_t>(tm.bounds[l])});
        }
        const auto models = symbol_models(mo.record);
        mo.payload = ec::encode_symbols(tm.symbols, models, names);
        mo.log.payload_bytes = mo.payload.size();
        mo.log.estimated_bits = rqec::rate_eval(tm.symbols, tm.stats).total;
        mo.log.final_mse = tm.final_mse;
        mo.log.probes = tm.probes;
        mo.epochs = std::move(tm.log);
        mo.theta_star = std::move(tm.theta_star);
        mo.log.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(mo));
    }
    return out;
}

// Runs fn(g) for every g in [0, n) on up to `jobs` threads; rethrows the first
// failure (lowest index).
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    std::vector<std::exception_ptr> errors(n);
    if (jobs == 1) {
        for (std::size_t g = 0; g < n; ++g) {
            try {
                fn(g);
            } catch (...) {
                errors[g] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) {
            pool.emplace_back([&] {
                for (std::size_t g; !failed && (g = next++) < n;) {
                    try {
                        fn(g);
                    } catch (...) {
                        errors[g] = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace

EncodeResult encode_video(const media::RawVideo& video, const PartitionPlan& plan, const inr::BackboneConfig& backbone,
                          const TrainConfig& cfg, const EncodeOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    validate(cfg);
    inr::validate(backbone);
    if (plan.frames != video.frames) {
        throw UsageError("partition covers " + std::to_string(plan.frames) + " frames, video has " +
                         std::to_string(video.frames));
    }
    if (backbone.out_w != video.width || backbone.out_h != video.height) {
        throw UsageError("backbone renders " + std::to_string(backbone.out_w) + "x" + std::to_string(backbone.out_h) +
                         ", video is " + std::to_string(video.width) + "x" + std::to_string(video.height));
    }
    const auto frames = media::normalize(video);
    std::vector<std::vector<ModelOutput>> per_gom(plan.goms.size());
    parallel_for(plan.goms.size(), opts.jobs,
                 [&](std::size_t g) { per_gom[g] = encode_gom(frames, plan, g, backbone, cfg); });

    bs::BitstreamHeader header;
    header.width = static_cast<std::uint32_t>(video.width);
    header.height = static_cast<std::uint32_t>(video.height);
    header.frames = static_cast<std::uint32_t>(video.frames);
    header.gop = static_cast<std::uint32_t>(plan.gop);
    header.gom = static_cast<std::uint32_t>(plan.gom);
    header.seed = cfg.seed;
    header.backbone_config = inr::to_text(backbone);
    header.layer_count = static_cast<std::uint32_t>(inr::param_layout(backbone).size());
    std::vector<std::vector<std::uint8_t>> payloads;
    EncodeResult res;
    for (auto& gom : per_gom) {
        for (auto& mo : gom) {
            header.models.push_back(mo.record);
            payloads.push_back(std::move(mo.payload));
            res.models.push_back(mo.log);
            res.epochs.insert(res.epochs.end(), mo.epochs.begin(), mo.epochs.end());
            res.theta_star.push_back(std::move(mo.theta_star));
        }
    }
    res.bitstream = bs::write_bitstream(std::move(header), payloads);

    res.reconstruction.resize(video.frames);
    for (std::size_t k = 0; k < plan.gops.size(); ++k) {
        const auto& r = plan.gops[k];
        for (std::size_t i = r.begin; i < r.end; ++i) {
            res.reconstruction[i] = inr::forward_frame(backbone, res.theta_star[k], inr::timestamp(i - r.begin, r.size()));
        }
    }
    res.bpp = bits_per_pixel(res.bitstream.size(), video.frames, video.height, video.width);
    res.psnr = media::psnr(video, media::denormalize(res.reconstruction)).mean;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// ---------------------------------------------------------------------------
// Decode

namespace {

struct StreamContext {
    bs::HeaderView view;
    inr::BackboneConfig backbone;
    Layout layout;
    PartitionPlan plan;
};

StreamContext open_stream(bs::ByteSource& src) {
    StreamContext c;
    c.view = bs::read_header(src);
    const auto& h = c.view.header;
    try {
        c.backbone = inr::parse_config(h.backbone_config);
        inr::validate(c.backbone);
    } catch (const inr::ConfigError& e) {
        throw DataError(std::string("bitstream backbone config: ") + e.what());
    }
    if (c.backbone.out_w != h.width || c.backbone.out_h != h.height) {
        throw DataError("bitstream backbone renders a different frame size than the header declares");
    }
    if (h.frames == 0 || h.gop == 0 || h.gom == 0) throw DataError("bitstream header has zero T, p or m");
    c.layout = inr::param_layout(c.backbone);
    if (h.layer_count != c.layout.size()) {
        throw DataError("bitstream declares " + std::to_string(h.layer_count) + " layers, backbone has " +
                        std::to_string(c.layout.size()));
    }
    c.plan = partition(h.frames, h.gop, h.gom);
    if (h.models.size() != c.plan.gops.size()) {
        throw DataError("bitstream has " + std::to_string(h.models.size()) + " models, partition needs " +
                        std::to_string(c.plan.gops.size()));
    }
    for (std::size_t k = 0; k < h.models.size(); ++k) {
        const auto& m = h.models[k];
        if (m.index != k) throw DataError("model record " + std::to_string(k) + " has index " + std::to_string(m.index));
        const auto want = c.plan.is_i_model(k) ? bs::Role::I : bs::Role::P;
        if (m.role != want) throw DataError("model " + std::to_string(k) + " has the wrong role for its GOM position");
        if (m.role == bs::Role::P && !(m.epsilon >= 0.0f && m.epsilon <= 1.0f)) {
            throw DataError("model " + std::to_string(k) + " has epsilon outside [0, 1]");
        }
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            const auto& lr = m.layers[l];
            if (!(lr.step > 0.0f) || !std::isfinite(lr.step) || !std::isfinite(lr.mu) || !(lr.sigma > 0.0f) ||
                !std::isfinite(lr.sigma) || lr.bound < 1 || lr.bound > rqec::kMaxBound) {
                throw DataError("model " + std::to_string(k) + " layer '" + c.layout[l].name +
                                "' has an invalid step, statistics or bound");
            }
        }
    }
    return c;
}

DecodeResult decode_range(bs::ByteSource& src, const StreamContext& c, std::size_t g) {
    const auto& h = c.view.header;
    const auto& gom = c.plan.goms.at(g);
    std::vector<std::size_t> counts;
    for (const auto& s : c.layout) counts.push_back(ad::numel(s.shape));
    DecodeResult res;
    res.width = h.width;
    res.height = h.height;
    res.frames = c.plan.gom_frames(g);
    for (std::size_t k = gom.begin; k < gom.end; ++k) {
        const auto& rec = h.models[k];
        const auto payload = bs::read_payload(src, c.view, k);
        const auto symbols = ec::decode_symbols(payload, symbol_models(rec), counts);
        ParamVector rand_k = inr::init_random(c.backbone, model_seed(h.seed, k));
        ParamVector theta_prime = k == gom.begin
                                      ? std::move(rand_k)
                                      : ii::interpolate_init(rand_k, res.theta_star.back(), static_cast<double>(rec.epsilon));
        const auto scales = record_scales(rec);
        const auto deq = rqec::dequantize(symbols, scales, c.layout);
        ParamVector theta = theta_prime.clone();
        for (std::size_t l = 0; l < theta.segments(); ++l) {
            auto o = theta[l].tensor.data();
            auto d = deq[l].tensor.data();
            for (std::size_t j = 0; j < o.size(); ++j) o[j] += d[j];
        }
        const auto& r = c.plan.gops[k];
        for (std::size_t i = 0; i < r.size(); ++i) {
            res.reconstruction.push_back(inr::forward_frame(c.backbone, theta, inr::timestamp(i, r.size())));
        }
        res.theta_star.push_back(std::move(theta));
    }
    return res;
}

} // namespace

DecodeResult decode_gom(bs::ByteSource& src, std::size_t g) {
    const auto c = open_stream(src);
    if (g >= c.plan.goms.size()) {
        throw UsageError("GOM " + std::to_string(g) + " out of range (stream has " +
                         std::to_string(c.plan.goms.size()) + ")");
    }
    return decode_range(src, c, g);
}

std::size_t gom_count(bs::ByteSource& src) { return open_stream(src).plan.goms.size(); }

DecodeResult decode_video(std::span<const std::uint8_t> bytes, unsigned jobs) {
    bs::MemorySource src(bytes);
    const auto c = open_stream(src);
    std::vector<DecodeResult> parts(c.plan.goms.size());
    parallel_for(parts.size(), jobs, [&](std::size_t g) {
        bs::MemorySource local(bytes);
        parts[g] = decode_range(local, c, g);
    });
    DecodeResult res;
    res.width = c.view.header.width;
    res.height = c.view.header.height;
    res.frames = {0, c.plan.frames};
    for (auto& p : parts) {
        for (auto& f : p.reconstruction) res.reconstruction.push_back(std::move(f));
        for (auto& t : p.theta_star) res.theta_star.push_back(std::move(t));
    }
    return res;
}

} // namespace uarnvc::pipe
