// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Generates (gap MSE, best epsilon) pairs on synthetic two-GOP clips and fits
// the constrained schedule. Each clip trains an I-model on GOP 0, then one
// P-model per epsilon on GOP 1; the epsilon with the lowest RD cost
// bpp + lambda * MSE * 255^2 wins.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "uarnvc/pipeline.hpp"
#include "uarnvc/rng.hpp"

using namespace uarnvc;

namespace {

struct Clip {
    media::SynthKind kind;
    double velocity;
    std::uint64_t seed;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"epsilon schedule calibration"};
    std::string out = "calibration.csv";
    std::size_t gop = 4;
    int epochs_i = 200, epochs_p = 100;
    double lambda = 1.0, lr_p = 2e-3;
    std::vector<std::uint64_t> seeds{1, 2};
    app.add_option("--out", out, "CSV output");
    app.add_option("--gop", gop);
    app.add_option("--epochs-i", epochs_i);
    app.add_option("--epochs-p", epochs_p);
    app.add_option("--lambda", lambda);
    app.add_option("--lr-p", lr_p);
    app.add_option("--seeds", seeds);
    CLI11_PARSE(app, argc, argv);

    const std::vector<double> grid{0.0, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.2, 0.3, 0.5, 1.0};
    std::vector<Clip> clips;
    for (auto s : seeds) {
        clips.push_back({media::SynthKind::moving_blob, 0.5, s});
        clips.push_back({media::SynthKind::moving_blob, 1.0, s});
        clips.push_back({media::SynthKind::moving_blob, 2.0, s});
        clips.push_back({media::SynthKind::moving_rect, 1.0, s});
        clips.push_back({media::SynthKind::noise_texture_pan, 0.5, s});
    }

    std::ofstream csv(out);
    csv << "mse,epsilon,kind,velocity,seed,cost\n";
    std::vector<ii::FitPoint> points;
    const auto bb = inr::preset("nerv-tiny", 32, 32);
    for (const auto& c : clips) {
        const auto video = media::synth_video(c.kind, 32, 32, 2 * gop, c.velocity, c.seed);
        const auto frames = media::normalize(video);
        const std::vector<Frame> g0(frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(gop));
        const std::vector<Frame> g1(frames.begin() + static_cast<std::ptrdiff_t>(gop), frames.end());
        pipe::TrainConfig cfg;
        cfg.epochs_i = epochs_i;
        cfg.epochs_p = epochs_p;
        cfg.lambda = lambda;
        cfg.lr_p = lr_p;
        cfg.seed = c.seed;
        const auto i_model =
            pipe::train_model(bs::Role::I, g0, inr::init_random(bb, model_seed(c.seed, 0)), bb, cfg, 0);
        const double gap = ii::gop_gap_mse(g0, g1).mse;
        const auto rnd = inr::init_random(bb, model_seed(c.seed, 1));
        const double pixels = static_cast<double>(gop * 32 * 32);
        double best_j = INFINITY, best_eps = 0.0;
        for (double eps : grid) {
            const auto init = ii::interpolate_init(rnd, i_model.theta_star, eps);
            const auto p = pipe::train_model(bs::Role::P, g1, init, bb, cfg, 1);
            const double bits = rqec::rate_eval(p.symbols, p.stats).total;
            const double j = bits / pixels + lambda * p.final_mse * 255.0 * 255.0;
            if (j < best_j) {
                best_j = j;
                best_eps = eps;
            }
        }
        std::printf("%-18s v=%.1f seed=%llu gap=%.5f best_eps=%.3f\n", media::to_string(c.kind).c_str(), c.velocity,
                    static_cast<unsigned long long>(c.seed), gap, best_eps);
        std::fflush(stdout);
        csv << gap << ',' << best_eps << ',' << media::to_string(c.kind) << ',' << c.velocity << ',' << c.seed << ','
            << best_j << '\n';
        points.push_back({gap, best_eps});
    }
    const auto fit = ii::fit_schedule(points, true);
    std::printf("b = %.6g (residual %.4g)\n", fit.schedule.b, fit.residual_norm);
    return 0;
}
