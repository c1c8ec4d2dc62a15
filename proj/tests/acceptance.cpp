// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "uarnvc/bd_rate.hpp"
#include "uarnvc/bitstream.hpp"
#include "uarnvc/ii_init.hpp"
#include "uarnvc/media.hpp"
#include "uarnvc/optim.hpp"
#include "uarnvc/pipeline.hpp"
#include "uarnvc/range_coder.hpp"
#include "uarnvc/rng.hpp"

using namespace uarnvc;

namespace {

// Pinned tolerances.
constexpr double kRateRel = 0.02;
constexpr double kRateAbsBits = 64.0;
constexpr double kGradRelErr = 1e-4;
constexpr std::size_t kGradMaxParams = 5000;
constexpr double kC1Seconds = 300.0;
constexpr double kC4Seconds = 600.0;
constexpr double kC4PRatio = 0.20;
constexpr double kC4PsnrSlack = 0.1;
constexpr double kC4MatchedPsnr = 0.2;
constexpr double kFitTol = 1e-6;
constexpr double kBdIdentical = 0.0005;  // prints as 0.000%
constexpr double kBdHalved = 0.01;
constexpr double kBdOracle = 0.1;

// Digest of the criterion 9 encode on the reference platform (x86-64 Linux,
// GCC). Another platform passes only if it produces the same bytes.
constexpr std::uint32_t kGoldenCrc = 0xf6aa8f34;
constexpr std::size_t kGoldenBytes = 6780;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void report(int id, const std::string& name, const std::function<std::string(bool&)>& body) {
    bool ok = true;
    std::string detail;
    try {
        detail = body(ok);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

bool same_bytes(const ParamVector& a, const ParamVector& b) { return a.serialize() == b.serialize(); }

bool rate_agrees(double estimate, double actual) {
    return std::abs(actual - estimate) <= kRateRel * estimate + kRateAbsBits;
}

double gop_psnr(const media::RawVideo& ref, const media::RawVideo& rec, pipe::FrameRange r) {
    double acc = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i)
        acc += media::capped(media::frame_psnr(ref.frame(i), rec.frame(i), ref.frame_bytes()));
    return acc / static_cast<double>(r.size());
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- 1 and 2

struct C1Model {
    double estimated_bits;
    std::size_t payload_bytes;
};
std::vector<C1Model> c1_models;

std::string criterion1(bool& ok) {
    const auto t0 = Clock::now();
    Rng r(20260101);
    const std::vector<media::SynthKind> kinds{media::SynthKind::static_scene, media::SynthKind::moving_blob,
                                              media::SynthKind::moving_rect, media::SynthKind::noise_texture_pan};
    const std::vector<std::string> backbones{"nerv-tiny", "nerv-small", "coord-mlp-small"};
    const int runs = 24;
    int bad = 0;
    std::size_t models = 0;
    for (int run = 0; run < runs; ++run) {
        const std::string bb = backbones[run % backbones.size()];
        const std::size_t side = bb == "coord-mlp-small" || r.next() % 2 ? 16 : 32;
        const std::size_t T = 4 + r.next() % 9;
        const std::size_t p = 1 + r.next() % 4;
        const std::size_t m = 1 + r.next() % 3;
        const auto video = media::synth_video(kinds[r.next() % kinds.size()], side, side, T, 0.5 + 1.5 * r.uniform(),
                                              r.next() % 1000);
        pipe::TrainConfig cfg;
        // Long enough that residuals look like trained ones.
        cfg.epochs_i = 30 + static_cast<int>(r.next() % 31);
        cfg.epochs_p = 15 + static_cast<int>(r.next() % 16);
        cfg.lambda = std::exp(std::log(0.05) + r.uniform() * std::log(100.0));
        cfg.seed = r.next();
        cfg.init = static_cast<pipe::InitMode>(r.next() % 3);
        const auto backbone = inr::preset(bb, side, side);
        const auto plan = pipe::partition(T, p, m);
        const unsigned jobs = 1 + static_cast<unsigned>(r.next() % 2);
        const auto enc = pipe::encode_video(video, plan, backbone, cfg, {jobs});
        const auto dec = pipe::decode_video(enc.bitstream, 2);

        bool run_ok = dec.theta_star.size() == enc.theta_star.size() && dec.reconstruction.size() == T;
        for (std::size_t k = 0; run_ok && k < enc.theta_star.size(); ++k)
            run_ok = same_bytes(dec.theta_star[k], enc.theta_star[k]);
        for (std::size_t i = 0; run_ok && i < T; ++i) run_ok = dec.reconstruction[i] == enc.reconstruction[i];
        if (!run_ok) {
            ++bad;
            std::printf("  run %d (%s %zux%zu T=%zu p=%zu m=%zu) mismatched\n", run, bb.c_str(), side, side, T, p, m);
        }
        for (const auto& ml : enc.models) c1_models.push_back({ml.estimated_bits, ml.payload_bytes});
        models += enc.models.size();
    }
    const double secs = since(t0);
    ok = bad == 0 && secs < kC1Seconds;
    return fmt("%d/%d runs bit-identical (%zu models), %.1f s (limit %.0f s)", runs - bad, runs, models, secs,
               kC1Seconds);
}

std::string criterion2(bool& ok) {
    struct Shape {
        std::vector<std::size_t> sizes;
        double sigma_lo, sigma_hi;
    };
    const std::vector<Shape> shapes{
        {{64}, 0.2, 1.0},           {{500}, 0.5, 3.0},          {{4000}, 2.0, 20.0},
        {{8, 8, 8, 8}, 0.1, 2.0},   {{32, 256, 1024}, 0.3, 6.0}, {{3000, 12}, 0.05, 0.5},
        {{200, 200, 200}, 5, 60},   {{1, 2, 3, 4, 5}, 0.5, 5.0}, {{10000}, 0.02, 0.2},
        {{128, 64, 32, 16}, 1, 200}};
    double worst = 0.0;
    int bad = 0, cases = 0;
    for (std::size_t si = 0; si < shapes.size(); ++si) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            Rng r(1000 * si + seed);
            rqec::Symbols sym;
            for (std::size_t n : shapes[si].sizes) {
                const double sigma =
                    shapes[si].sigma_lo * std::pow(shapes[si].sigma_hi / shapes[si].sigma_lo, r.uniform());
                const double mu = 0.5 * sigma * (r.uniform() - 0.5);
                std::vector<std::int32_t> layer(n);
                for (auto& k : layer) k = static_cast<std::int32_t>(rqec::round_half_away(mu + sigma * r.normal()));
                sym.push_back(std::move(layer));
            }
            const auto stats = rqec::round_to_f32(rqec::fit_symbol_stats(sym));
            std::vector<ec::SymbolModel> models;
            for (std::size_t l = 0; l < sym.size(); ++l)
                models.push_back(ec::build_model(stats[l].mu, stats[l].sigma, ec::layer_bound(sym[l])));
            const double est = rqec::rate_eval(sym, stats).total;
            const double actual = 8.0 * static_cast<double>(ec::encode_symbols(sym, models).size());
            worst = std::max(worst, std::abs(actual - est) / (kRateRel * est + kRateAbsBits));
            bad += !rate_agrees(est, actual);
            ++cases;
        }
    }
    int bad_c1 = 0;
    for (const auto& m : c1_models) {
        const double actual = 8.0 * static_cast<double>(m.payload_bytes);
        worst = std::max(worst, std::abs(actual - m.estimated_bits) / (kRateRel * m.estimated_bits + kRateAbsBits));
        bad_c1 += !rate_agrees(m.estimated_bits, actual);
    }
    ok = bad == 0 && bad_c1 == 0 && !c1_models.empty();
    return fmt("sampled %d/%d, criterion-1 models %zu/%zu within 2%% + 64 bits; worst |diff|/tolerance %.3f",
               cases - bad, cases, c1_models.size() - bad_c1, c1_models.size(), worst);
}

// ---------------------------------------------------------------- 3

inr::BackboneConfig small_nerv(inr::Upsample up, inr::Activation act) {
    inr::BackboneConfig c;
    c.kind = inr::BackboneKind::nerv_lite;
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

inr::BackboneConfig small_mlp() {
    inr::BackboneConfig c;
    c.kind = inr::BackboneKind::coord_mlp;
    c.pe_freqs = 2;
    c.out_h = 4;
    c.out_w = 4;
    c.mlp_widths = {8, 3};
    return c;
}

Frame test_target(std::size_t w, std::size_t h) {
    Frame f(w, h);
    for (std::size_t i = 0; i < f.planes.size(); ++i) f.planes[i] = 0.5 + 0.4 * std::sin(0.37 * static_cast<double>(i));
    return f;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, oracle::rel_err(a[i], b[i], 1e-7));
    return worst;
}

std::vector<double> flat_grad(const std::vector<ad::Tensor>& ts) {
    std::vector<double> g;
    for (const auto& t : ts) {
        if (t.has_grad())
            g.insert(g.end(), t.grad().begin(), t.grad().end());
        else
            g.insert(g.end(), t.size(), 0.0);
    }
    return g;
}

// Distortion gradient, then the STE and rate paths of the training loss.
double check_backbone(const inr::BackboneConfig& cfg, std::uint64_t seed, std::size_t& params) {
    const auto layout = inr::param_layout(cfg);
    params = total_count(layout);
    if (params > kGradMaxParams) throw std::runtime_error("backbone too large for the gradient check");
    const auto target = inr::target_tensor(cfg, test_target(cfg.out_w, cfg.out_h));
    const double t = 0.3;

    // Plain distortion.
    auto p = inr::init_random(cfg, seed);
    p.set_requires_grad(true);
    {
        ad::Tape tape;
        tape.backward(tape.mean_square(tape.sub(inr::forward(tape, cfg, p.tensors(), t), target)));
    }
    const auto distortion = [&](const std::vector<double>& x) {
        auto q = ParamVector::zeros(layout);
        q.assign_flat(x);
        ad::Tape tape;
        return tape.mean_square(tape.sub(inr::forward(tape, cfg, q.tensors(), t), target)).item();
    };
    double worst = max_rel(flat_grad(p.tensors()), oracle::fd_gradient(distortion, p.flatten(), 1e-5));

    // Training loss: theta -> eff = theta' + ste_round((theta - theta') / s) * s.
    const auto prime = inr::init_random(cfg, seed + 100);
    const auto primes = prime.tensors();
    const auto steps = rqec::initial_scales(prime);
    auto theta = prime.clone();
    Rng r(seed);
    for (std::size_t l = 0; l < theta.segments(); ++l)
        for (auto& v : theta[l].tensor.data()) v += 0.05 * r.normal();
    theta.set_requires_grad(true);
    const std::size_t L = layout.size();
    std::vector<ad::Tensor> log_s(L);
    for (std::size_t l = 0; l < L; ++l) log_s[l] = ad::Tensor::scalar(std::log(steps.step(l)), true);
    std::vector<std::vector<double>> noise(L);
    for (std::size_t l = 0; l < L; ++l) {
        noise[l].resize(theta[l].tensor.size());
        for (auto& u : noise[l]) u = r.uniform() - 0.5;
    }
    rqec::LayerStats stats(L);
    for (std::size_t l = 0; l < L; ++l) stats[l] = {0.1 * r.normal(), 0.5 + r.uniform()};

    // STE: d(loss)/d(theta) must equal d(distortion)/d(eff) at the effective point.
    std::vector<double> eff_flat;
    {
        ad::Tape tape;
        std::vector<ad::Tensor> eff(L);
        for (std::size_t l = 0; l < L; ++l) {
            const auto s = tape.exp(log_s[l]);
            const auto y = tape.div(tape.sub(theta[l].tensor, primes[l]), s);
            eff[l] = tape.add(primes[l], tape.mul(tape.ste_round(y), s));
            eff_flat.insert(eff_flat.end(), eff[l].data().begin(), eff[l].data().end());
        }
        tape.backward(tape.mean_square(tape.sub(inr::forward(tape, cfg, eff, t), target)));
    }
    worst = std::max(worst, max_rel(flat_grad(theta.tensors()), oracle::fd_gradient(distortion, eff_flat, 1e-5)));

    // Rate term with the noise fixed: gradients in theta and in the log steps.
    theta.zero_grad();
    for (auto& s : log_s) s.zero_grad();
    const auto rate = [&](const std::vector<double>& th, const std::vector<double>& ls, bool grad) {
        auto q = ParamVector::zeros(layout);
        q.assign_flat(th);
        ad::Tape tape;
        std::vector<ad::Tensor> scaled(L);
        for (std::size_t l = 0; l < L; ++l) {
            const auto& src = grad ? theta[l].tensor : q[l].tensor;
            const auto s = grad ? tape.exp(log_s[l]) : tape.exp(ad::Tensor::scalar(ls[l]));
            scaled[l] = tape.div(tape.sub(src, primes[l]), s);
        }
        const auto bits = rqec::rate_train(tape, scaled, stats, noise);
        if (grad) tape.backward(bits);
        return bits.item();
    };
    std::vector<double> ls0(L);
    for (std::size_t l = 0; l < L; ++l) ls0[l] = log_s[l].item();
    const auto th0 = theta.flatten();
    rate(th0, ls0, true);
    worst = std::max(worst, max_rel(flat_grad(theta.tensors()),
                                    oracle::fd_gradient([&](const auto& x) { return rate(x, ls0, false); }, th0, 1e-6)));
    worst = std::max(worst, max_rel(flat_grad(log_s),
                                    oracle::fd_gradient([&](const auto& x) { return rate(th0, x, false); }, ls0, 1e-6)));
    return worst;
}

std::string criterion3(bool& ok) {
    std::string detail;
    double worst = 0.0;
    int n = 0;
    const std::vector<std::pair<std::string, inr::BackboneConfig>> cfgs{
        {"nerv nearest/gelu", small_nerv(inr::Upsample::nearest, inr::Activation::gelu)},
        {"nerv shuffle/sin", small_nerv(inr::Upsample::pixel_shuffle, inr::Activation::sin)},
        {"coord-mlp", small_mlp()}};
    for (const auto& [name, cfg] : cfgs) {
        std::size_t params = 0;
        const double e = check_backbone(cfg, 11 + n++, params);
        worst = std::max(worst, e);
        detail += fmt("%s%s (%zu params) %.2e", detail.empty() ? "" : ", ", name.c_str(), params, e);
    }
    ok = worst < kGradRelErr && n >= 3;
    return "max rel err " + fmt("%.2e < %.0e; ", worst, kGradRelErr) + detail;
}

// ---------------------------------------------------------------- 4

std::string criterion4(bool& ok) {
    const auto t0 = Clock::now();
    const std::size_t S = 32, T = 60, p = 10;
    const auto video = media::synth_video(media::SynthKind::static_scene, S, S, T, 1.0, 7);
    const auto backbone = inr::preset("nerv-tiny", S, S);
    pipe::TrainConfig cfg;
    cfg.lambda = 0.1;
    cfg.lr_p = 1e-3;
    cfg.seed = 4;

    const auto plan3 = pipe::partition(T, p, 3);
    const auto e3 = pipe::encode_video(video, plan3, backbone, cfg);
    const auto rec3 = media::denormalize(e3.reconstruction);
    double i_bits = 0.0, p_bits = 0.0, worst_gap = -1e9;
    std::vector<double> i_psnr;
    for (const auto& m : e3.models) {
        const double q = gop_psnr(video, rec3, plan3.gops[m.index]);
        if (m.role == bs::Role::I) {
            i_bits += 8.0 * m.payload_bytes;
            i_psnr.push_back(q);
        }
    }
    for (const auto& m : e3.models) {
        if (m.role != bs::Role::P) continue;
        p_bits += 8.0 * m.payload_bytes;
        const double q = gop_psnr(video, rec3, plan3.gops[m.index]);
        const double ref = i_psnr[plan3.gom_of(m.index)];
        worst_gap = std::max(worst_gap, ref - q);
    }
    // m=1 anchor: raise lambda until its PSNR lands inside the matching window.
    pipe::EncodeResult e1;
    double lambda1 = 0.0;
    bool matched = false;
    for (double l : {0.1, 0.15, 0.2, 0.3, 0.5}) {
        auto c1 = cfg;
        c1.lambda = l;
        e1 = pipe::encode_video(video, pipe::partition(T, p, 1), backbone, c1);
        lambda1 = l;
        if (std::abs(e3.psnr - e1.psnr) <= kC4MatchedPsnr) {
            matched = true;
            break;
        }
        if (e1.psnr > e3.psnr) break;
    }
    const double secs = since(t0);

    const double ratio = p_bits / i_bits;
    const bool part1 = ratio < kC4PRatio && worst_gap <= kC4PsnrSlack;
    const bool part2 = matched && e3.bitstream.size() < e1.bitstream.size();
    ok = part1 && part2 && secs < kC4Seconds;
    return fmt("P/I bits %.3f (< %.2f), worst P-vs-I PSNR drop %.3f dB (<= %.1f); m=3 %zu B @ %.3f dB vs m=1 %zu B "
               "@ %.3f dB (lambda %.2f, |dPSNR| <= %.1f: %s); %.1f s",
               ratio, kC4PRatio, worst_gap, kC4PsnrSlack, e3.bitstream.size(), e3.psnr, e1.bitstream.size(), e1.psnr,
               lambda1, kC4MatchedPsnr, matched ? "yes" : "no", secs);
}

// ---------------------------------------------------------------- 5

std::string criterion5(bool& ok) {
    const std::size_t S = 32, p = 4;
    const auto backbone = inr::preset("nerv-tiny", S, S);
    const auto plan = pipe::partition(2 * p, p, 2);
    const double pixels = static_cast<double>(p * S * S);
    std::vector<double> early[3], cost[3];
    const pipe::InitMode modes[3] = {pipe::InitMode::interpolate, pipe::InitMode::duplicate, pipe::InitMode::random};
    double eps = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto video = media::synth_video(media::SynthKind::moving_blob, S, S, 2 * p, 1.0, seed);
        for (int k = 0; k < 3; ++k) {
            pipe::TrainConfig cfg;
            cfg.seed = seed;
            cfg.init = modes[k];
            cfg.probe_epochs = {cfg.epochs_p / 4};
            const auto e = pipe::encode_video(video, plan, backbone, cfg);
            const auto& pm = e.models.at(1);
            if (k == 0) eps = pm.epsilon;
            early[k].push_back(10.0 * std::log10(1.0 / pm.probes.at(0).second));
            cost[k].push_back(8.0 * pm.payload_bytes / pixels + cfg.lambda * pm.final_mse * 255.0 * 255.0);
        }
    }
    const double ii = median(early[0]), d = median(early[1]), rr = median(early[2]);
    const double jii = median(cost[0]), jd = median(cost[1]), jr = median(cost[2]);
    ok = ii >= d && ii >= rr && jii <= jd;
    return fmt("median PSNR at 25%% budget II %.3f, D %.3f, R %.3f dB (eps %.4f); median final cost bpp + "
               "lambda*MSE: II %.4f, D %.4f, R %.4f",
               ii, d, rr, eps, jii, jd, jr);
}

// ---------------------------------------------------------------- 6

std::string criterion6(bool& ok) {
    bool mono = true;
    const auto sched = ii::default_schedule();
    double prev = -1.0;
    for (int i = 0; i < 1000; ++i) {
        const double e = ii::epsilon_for(i / 999.0, sched);
        mono &= e >= prev;
        prev = e;
    }
    const bool zero = ii::epsilon_for(0.0, sched) == 0.0;
    double worst = 0.0;
    for (double b : {0.5, 5.4222, 20.0, 150.0}) {
        std::vector<ii::FitPoint> pts;
        for (int i = 1; i <= 20; ++i) {
            const double mse = i * 0.6 / (b * 20.0);
            pts.push_back({mse, 1.0 - std::exp(-b * mse)});
        }
        worst = std::max(worst, std::abs(ii::fit_schedule(pts, true).schedule.b - b) / b);
    }
    {
        std::vector<ii::FitPoint> pts;
        for (int i = 0; i < 20; ++i) pts.push_back({0.01 * i, 1.0 - 0.7 * std::exp(-12.0 * 0.01 * i)});
        const auto f = ii::fit_schedule(pts, false);
        worst = std::max({worst, std::abs(f.schedule.b - 12.0) / 12.0,
                          std::abs(f.schedule.a * std::exp(f.schedule.c) - 0.7)});
    }
    ok = mono && zero && worst < kFitTol;
    return fmt("monotone on 1000 points: %s; eps(0) = %g; worst planted-parameter error %.2e (< %.0e)",
               mono ? "yes" : "no", ii::epsilon_for(0.0, sched), worst, kFitTol);
}

// ---------------------------------------------------------------- 7

std::vector<media::RDPoint> random_curve(Rng& r) {
    std::vector<media::RDPoint> c;
    double bpp = 0.02 + 0.05 * r.uniform();
    double q = 25.0 + 3.0 * r.uniform();
    for (int i = 0; i < 4 + static_cast<int>(r.next() % 3); ++i) {
        c.push_back({bpp, q});
        bpp *= 1.4 + 0.8 * r.uniform();
        q += 1.0 + 2.0 * r.uniform();
    }
    return c;
}

std::vector<oracle::Point> to_oracle(const std::vector<media::RDPoint>& c) {
    std::vector<oracle::Point> o;
    for (const auto& p : c) o.push_back({p.bpp, p.psnr});
    return o;
}

std::string criterion7(bool& ok) {
    Rng r(77);
    const auto a = random_curve(r);
    const double same = media::bd_rate(a, a);
    auto half = a;
    for (auto& p : half) p.bpp /= 2.0;
    const double halved = media::bd_rate(a, half);
    double worst = 0.0;
    for (int i = 0; i < 50;) {
        const auto x = random_curve(r);
        auto y = x;
        const double shift = 0.6 * (r.uniform() - 0.5);
        for (auto& p : y) {
            p.bpp *= std::exp(0.3 * (r.uniform() - 0.5));
            p.psnr += shift + 0.4 * (r.uniform() - 0.5);
        }
        std::sort(y.begin(), y.end(), [](const auto& u, const auto& v) { return u.psnr < v.psnr; });
        bool monotone = true;
        for (std::size_t k = 1; k < y.size(); ++k) monotone &= y[k].bpp > y[k - 1].bpp;
        if (!monotone) continue;
        worst = std::max(worst, std::abs(media::bd_rate(x, y) - oracle::bd_rate_dense(to_oracle(x), to_oracle(y))));
        ++i;
    }
    ok = std::abs(same) < kBdIdentical && std::abs(halved + 50.0) <= kBdHalved && worst < kBdOracle;
    return fmt("identical %.3f%%, halved %.4f%%, worst |diff| vs dense oracle on 50 pairs %.4f pp", same, halved,
               worst);
}

// ---------------------------------------------------------------- 8

std::string criterion8(bool& ok) {
    const std::size_t S = 16, T = 12;
    const auto video = media::synth_video(media::SynthKind::moving_rect, S, S, T, 1.0, 8);
    pipe::TrainConfig cfg;
    cfg.epochs_i = 4;
    cfg.epochs_p = 3;
    cfg.seed = 8;
    const auto plan = pipe::partition(T, 2, 2);
    const auto enc = pipe::encode_video(video, plan, inr::preset("nerv-tiny", S, S), cfg);
    bs::MemorySource clean(enc.bitstream);
    const auto view = bs::read_header(clean);

    std::vector<pipe::DecodeResult> reference;
    for (std::size_t g = 0; g < plan.goms.size(); ++g) reference.push_back(pipe::decode_gom(clean, g));

    int isolation_bad = 0, pairs = 0;
    for (std::size_t a = 0; a < plan.goms.size(); ++a) {
        auto bytes = enc.bitstream;
        for (std::size_t k = plan.goms[a].begin; k < plan.goms[a].end; ++k)
            std::fill_n(bytes.begin() + static_cast<std::ptrdiff_t>(view.payload_offsets[k]),
                        view.header.models[k].payload_bytes, std::uint8_t{0});
        bs::MemorySource src(bytes);
        for (std::size_t b = 0; b < plan.goms.size(); ++b) {
            if (b == a) continue;
            ++pairs;
            isolation_bad += pipe::decode_gom(src, b).reconstruction != reference[b].reconstruction;
        }
    }

    int trace_bad = 0;
    const std::size_t header_end = view.payload_offsets.front();
    for (std::size_t g = 0; g < plan.goms.size(); ++g) {
        bs::TracingSource tr(clean);
        pipe::decode_gom(tr, g);
        std::vector<bool> touched(view.payload_offsets.size(), false);
        for (const auto& [off, n] : tr.reads()) {
            if (off + n <= header_end) continue;
            bool inside = false;
            for (std::size_t k = plan.goms[g].begin; k < plan.goms[g].end; ++k) {
                const std::size_t lo = view.payload_offsets[k], hi = lo + view.header.models[k].payload_bytes;
                if (off >= lo && off + n <= hi) {
                    inside = true;
                    touched[k] = true;
                }
            }
            trace_bad += !inside;
        }
        for (std::size_t k = plan.goms[g].begin; k < plan.goms[g].end; ++k) trace_bad += !touched[k];
    }
    ok = isolation_bad == 0 && trace_bad == 0 && pairs > 0;
    return fmt("%d/%d corrupted-GOM pairs left other GOMs identical; %zu single-GOM traces, %d stray reads", pairs - isolation_bad,
               pairs, plan.goms.size(), trace_bad);
}

// ---------------------------------------------------------------- 9

int run_cli(const std::string& args) {
    const int status = std::system(("'" + std::string(UARNVC_CLI) + "' " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string criterion9(bool& ok) {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "uarnvc_acceptance_c9";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = "'" + dir.string() + "/";
    bool cli_ok = run_cli("synth --kind moving-blob -W 32 -H 32 -T 8 --seed 3 --out " + d + "clip.rgb'") == 0 &&
                  run_cli("encode -i " + d + "clip.rgb' -o " + d + "first.uarn' -W 32 -H 32 -p 4 --m 2 --epochs-i 12 "
                          "--epochs-p 6 --seed 99 -j 2") == 0 &&
                  run_cli("encode --manifest " + d + "first.uarn.manifest.json' -o " + d + "a.uarn' --manifest-out " +
                          d + "a.json'") == 0 &&
                  run_cli("encode --manifest " + d + "first.uarn.manifest.json' -o " + d + "b.uarn' --manifest-out " +
                          d + "b.json'") == 0;
    const auto a = slurp(dir / "a.uarn"), b = slurp(dir / "b.uarn");
    cli_ok = cli_ok && !a.empty() && a == b && a == slurp(dir / "first.uarn");
    fs::remove_all(dir);

    const std::uint32_t crc = a.empty() ? 0 : bs::crc32(a);
    const bool golden_pinned = kGoldenBytes != 0;
    const bool golden_ok = !golden_pinned || (crc == kGoldenCrc && a.size() == kGoldenBytes);
    ok = cli_ok && golden_ok;
    return fmt("two manifest encodes byte-identical: %s (%zu B, crc32 %08x); reference-platform digest %s",
               cli_ok ? "yes" : "no", a.size(), crc,
               golden_pinned ? (golden_ok ? "matches" : "DIFFERS") : "not pinned");
}

} // namespace

int main() {
    const auto t0 = Clock::now();
    report(1, "lossless parameter path", criterion1);
    report(2, "rate-model fidelity", criterion2);
    report(3, "gradient correctness", criterion3);
    report(4, "reference-coding gain", criterion4);
    report(5, "interpolation init trend", criterion5);
    report(6, "epsilon schedule", criterion6);
    report(7, "BD-rate", criterion7);
    report(8, "GOM isolation and random access", criterion8);
    report(9, "determinism", criterion9);
    std::printf("%d of 9 criteria failed, %.1f s total\n", failures, since(t0));
    return failures == 0 ? 0 : 1;
}
