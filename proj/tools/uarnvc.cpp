// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// uarnvc command-line interface.
//
//   uarnvc encode  --input clip.rgb --out clip.uarn [--csv runs.csv] [--log run.jsonl]
//   uarnvc decode  --input clip.uarn --out clip.rgb [--gom g] [--dump-header]
//   uarnvc synth   --kind static --out clip.rgb
//   uarnvc eval    --ref a.rgb --test b.rgb
//   uarnvc bdrate  --anchor a.csv --test b.csv
//   uarnvc fit-epsilon --input points.csv --out schedule.json
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 numeric.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uarnvc/bd_rate.hpp"
#include "uarnvc/error.hpp"
#include "uarnvc/pipeline.hpp"
#include "uarnvc/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace uarnvc;

namespace {

// ---------------------------------------------------------------------------
// File helpers

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::string& path) {
    const auto b = read_file(path);
    return {b.begin(), b.end()};
}

// Writes to a sibling temp file and renames, so a failed run leaves nothing.
void write_atomic(const std::string& path, std::string_view bytes) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write '" + path + "'");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        f.close();
        if (!f) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw DataError("write failed for '" + path + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw DataError("cannot move output into place at '" + path + "'");
    }
}

void write_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    write_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void append_csv(const std::string& path, const std::string& header, const std::string& row) {
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream f(path, std::ios::app);
    if (!f) throw DataError("cannot write '" + path + "'");
    if (fresh) f << header << '\n';
    f << row << '\n';
    if (!f) throw DataError("write failed for '" + path + "'");
}

// Minimal header-keyed CSV: comma separated, no quoting.
struct Csv {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::initializer_list<const char*> names, const std::string& path) const {
        for (const char* n : names) {
            for (std::size_t i = 0; i < columns.size(); ++i)
                if (columns[i] == n) return i;
        }
        throw DataError("'" + path + "': missing column '" + *names.begin() + "'");
    }
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    return out;
}

Csv read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open '" + path + "'");
    Csv csv;
    std::string line;
    if (!std::getline(f, line)) throw DataError("'" + path + "': empty CSV");
    csv.columns = split(line);
    while (std::getline(f, line)) {
        if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
        csv.rows.push_back(split(line));
    }
    return csv;
}

double cell_double(const Csv& csv, std::size_t row, std::size_t col, const std::string& path) {
    const auto& r = csv.rows[row];
    const std::string where = "'" + path + "' line " + std::to_string(row + 2);
    if (col >= r.size()) throw DataError(where + ": missing field '" + csv.columns[col] + "'");
    try {
        std::size_t used = 0;
        const double v = std::stod(r[col], &used);
        if (used != r[col].size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": '" + r[col] + "' is not a number");
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------
// Encode settings and manifest

struct TrainPreset {
    int epochs_i, epochs_p;
};

const std::map<std::string, TrainPreset>& train_presets() {
    static const std::map<std::string, TrainPreset> m{
        {"desk", {200, 100}},
        {"full-small", {3000, 2000}},
        {"full-medium", {1500, 2000}},
        {"full-large", {1500, 1000}},
    };
    return m;
}

const std::map<std::string, std::size_t>& gop_presets() {
    static const std::map<std::string, std::size_t> m{{"gop-small", 6}, {"gop-medium", 30}, {"gop-large", 120}};
    return m;
}

struct EncodeSettings {
    std::string input;
    std::string sequence;
    std::size_t width = 32;
    std::size_t height = 32;
    std::size_t gop = 10;
    std::size_t gom = 3;
    std::string backbone_preset = "nerv-tiny";
    std::optional<std::string> backbone_text;  // overrides the preset
    pipe::TrainConfig train;
    unsigned jobs = 1;
};

json schedule_json(const ii::EpsilonSchedule& s) { return {{"a", s.a}, {"b", s.b}, {"c", s.c}}; }

ii::EpsilonSchedule schedule_from(const json& j) {
    try {
        return {j.at("a").get<double>(), j.at("b").get<double>(), j.value("c", 0.0)};
    } catch (const json::exception& e) {
        throw DataError(std::string("schedule: ") + e.what());
    }
}

inr::BackboneConfig resolve_backbone(const EncodeSettings& s) {
    try {
        if (s.backbone_text) return inr::parse_config(*s.backbone_text);
        return inr::preset(s.backbone_preset, s.height, s.width);
    } catch (const inr::ConfigError& e) {
        throw UsageError(std::string("backbone: ") + e.what());
    }
}

json manifest_json(const EncodeSettings& s, const inr::BackboneConfig& bb, std::uint32_t input_crc) {
    const auto& t = s.train;
    return {
        {"tool", "uarnvc"},
        {"version", kToolVersion},
        {"input", s.input},
        {"input_crc32", input_crc},
        {"sequence", s.sequence},
        {"width", s.width},
        {"height", s.height},
        {"gop", s.gop},
        {"gom", s.gom},
        {"backbone_preset", s.backbone_preset},
        {"backbone", inr::to_text(bb)},
        {"train",
         {{"epochs_i", t.epochs_i},
          {"epochs_p", t.epochs_p},
          {"lr_i", t.lr_i},
          {"lr_p", t.lr_p},
          {"lambda", t.lambda},
          {"warmup_frac", t.warmup_frac},
          {"batch_size", t.batch_size},
          {"init", pipe::to_string(t.init)}}},
        {"schedule", schedule_json(t.schedule)},
        {"seed", t.seed},
        {"jobs", s.jobs},
    };
}

struct LoadedManifest {
    EncodeSettings settings;
    bool has_crc = false;
    std::uint32_t input_crc = 0;
};

LoadedManifest load_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw DataError("manifest '" + path + "': " + e.what());
    }
    LoadedManifest m;
    auto& s = m.settings;
    try {
        s.input = j.at("input").get<std::string>();
        s.sequence = j.value("sequence", std::string());
        s.width = j.at("width").get<std::size_t>();
        s.height = j.at("height").get<std::size_t>();
        s.gop = j.at("gop").get<std::size_t>();
        s.gom = j.at("gom").get<std::size_t>();
        s.backbone_preset = j.value("backbone_preset", s.backbone_preset);
        if (j.contains("backbone")) s.backbone_text = j.at("backbone").get<std::string>();
        const auto& t = j.at("train");
        s.train.epochs_i = t.at("epochs_i").get<int>();
        s.train.epochs_p = t.at("epochs_p").get<int>();
        s.train.lr_i = t.at("lr_i").get<double>();
        s.train.lr_p = t.at("lr_p").get<double>();
        s.train.lambda = t.at("lambda").get<double>();
        s.train.warmup_frac = t.at("warmup_frac").get<double>();
        s.train.batch_size = t.value("batch_size", 1);
        s.train.init = pipe::parse_init_mode(t.value("init", std::string("interpolate")));
        s.train.schedule = schedule_from(j.at("schedule"));
        s.train.seed = j.at("seed").get<std::uint64_t>();
        s.jobs = j.value("jobs", 1u);
        if (j.contains("input_crc32")) {
            m.has_crc = true;
            m.input_crc = j.at("input_crc32").get<std::uint32_t>();
        }
    } catch (const json::exception& e) {
        throw DataError("manifest '" + path + "': " + e.what());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Subcommands

struct EncodeArgs {
    std::string manifest_in;
    std::string out;
    std::string csv;
    std::string log;
    std::string manifest_out;
    std::string preset;
    std::string train_preset;
    std::string backbone_config;
    std::string schedule;
    std::string init = "interpolate";
    std::string lambda_preset;
    EncodeSettings s;
};

void setup_encode(CLI::App& app, EncodeArgs& a) {
    auto* sub = app.add_subcommand("encode", "encode a raw RGB8 planar video");
    sub->add_option("--manifest", a.manifest_in, "reproduce a run from its manifest; explicit flags override it");
    sub->add_option("-i,--input", a.s.input, "raw planar RGB8 input");
    sub->add_option("-o,--out", a.out, "bitstream output")->required();
    sub->add_option("-W,--width", a.s.width)->capture_default_str();
    sub->add_option("-H,--height", a.s.height)->capture_default_str();
    sub->add_option("-p,--gop", a.s.gop, "frames per GOP")->capture_default_str();
    sub->add_option("--preset", a.preset, "GOP preset: gop-small (6), gop-medium (30), gop-large (120)");
    sub->add_option("-m,--m", a.s.gom, "models per GOM (1 disables references)")->capture_default_str();
    sub->add_option("--backbone", a.s.backbone_preset, "backbone preset")->capture_default_str();
    sub->add_option("--backbone-config", a.backbone_config, "backbone key=value file (overrides --backbone)");
    sub->add_option("--lambda", a.s.train.lambda, "distortion weight")->capture_default_str();
    sub->add_option("--lambda-preset", a.lambda_preset, "hinerv (5.0) or hnerv (0.5)");
    sub->add_option("--epochs-i", a.s.train.epochs_i)->capture_default_str();
    sub->add_option("--epochs-p", a.s.train.epochs_p)->capture_default_str();
    sub->add_option("--train-preset", a.train_preset, "desk, full-small, full-medium, full-large");
    sub->add_option("--lr-i", a.s.train.lr_i)->capture_default_str();
    sub->add_option("--lr-p", a.s.train.lr_p)->capture_default_str();
    sub->add_option("--warmup", a.s.train.warmup_frac, "warmup fraction of steps")->capture_default_str();
    sub->add_option("--init", a.init, "P-model init: interpolate, duplicate, random")->capture_default_str();
    sub->add_option("--schedule", a.schedule, "epsilon schedule JSON from fit-epsilon");
    sub->add_option("--seed", a.s.train.seed)->capture_default_str();
    sub->add_option("-j,--jobs", a.s.jobs, "GOMs trained concurrently")->capture_default_str();
    sub->add_option("--sequence", a.s.sequence, "name in the CSV row (default: input file stem)");
    sub->add_option("--csv", a.csv, "append a summary row");
    sub->add_option("--log", a.log, "line-delimited JSON run log");
    sub->add_option("--manifest-out", a.manifest_out, "manifest path (default: <out>.manifest.json)");
}

int run_encode(CLI::App& sub, EncodeArgs& a) {
    EncodeSettings s;
    bool check_crc = false;
    std::uint32_t expect_crc = 0;
    if (!a.manifest_in.empty()) {
        auto m = load_manifest(a.manifest_in);
        s = m.settings;
        check_crc = m.has_crc;
        expect_crc = m.input_crc;
    }
    auto given = [&](const char* name) { return sub.count(name) > 0; };
    if (given("--input")) s.input = a.s.input, check_crc = false;
    if (given("--width")) s.width = a.s.width;
    if (given("--height")) s.height = a.s.height;
    if (given("--gop")) s.gop = a.s.gop;
    if (given("--m")) s.gom = a.s.gom;
    if (given("--backbone")) s.backbone_preset = a.s.backbone_preset, s.backbone_text.reset();
    if (given("--lambda")) s.train.lambda = a.s.train.lambda;
    if (given("--epochs-i")) s.train.epochs_i = a.s.train.epochs_i;
    if (given("--epochs-p")) s.train.epochs_p = a.s.train.epochs_p;
    if (given("--lr-i")) s.train.lr_i = a.s.train.lr_i;
    if (given("--lr-p")) s.train.lr_p = a.s.train.lr_p;
    if (given("--warmup")) s.train.warmup_frac = a.s.train.warmup_frac;
    if (given("--seed")) s.train.seed = a.s.train.seed;
    if (given("--jobs")) s.jobs = a.s.jobs;
    if (given("--sequence")) s.sequence = a.s.sequence;
    if (given("--init")) s.train.init = pipe::parse_init_mode(a.init);
    if (!a.preset.empty()) {
        const auto it = gop_presets().find(a.preset);
        if (it == gop_presets().end()) throw UsageError("unknown GOP preset '" + a.preset + "'");
        if (given("--gop")) throw UsageError("--preset and --gop are exclusive");
        s.gop = it->second;
    }
    if (!a.lambda_preset.empty()) {
        if (given("--lambda")) throw UsageError("--lambda-preset and --lambda are exclusive");
        s.train.lambda = rqec::lambda_preset(a.lambda_preset);
    }
    if (!a.train_preset.empty()) {
        const auto it = train_presets().find(a.train_preset);
        if (it == train_presets().end()) throw UsageError("unknown train preset '" + a.train_preset + "'");
        if (!given("--epochs-i")) s.train.epochs_i = it->second.epochs_i;
        if (!given("--epochs-p")) s.train.epochs_p = it->second.epochs_p;
    }
    if (!a.backbone_config.empty()) s.backbone_text = read_text(a.backbone_config);
    if (!a.schedule.empty()) {
        try {
            s.train.schedule = schedule_from(json::parse(read_text(a.schedule)));
        } catch (const json::parse_error& e) {
            throw DataError("schedule '" + a.schedule + "': " + e.what());
        }
    }
    if (s.input.empty()) throw UsageError("encode needs --input or --manifest");
    if (s.gop == 0 || s.gom == 0) throw UsageError("--gop and --m must be at least 1");
    if (s.jobs == 0) throw UsageError("--jobs must be at least 1");
    if (s.sequence.empty()) s.sequence = fs::path(s.input).stem().string();
    pipe::validate(s.train);

    const auto video = media::load_raw(s.input, s.width, s.height);
    const std::uint32_t crc = bs::crc32(video.data);
    if (check_crc && expect_crc != crc) {
        throw DataError("input '" + s.input + "' differs from the manifest's (crc32 mismatch)");
    }
    const auto bb = resolve_backbone(s);
    if (bb.out_w != s.width || bb.out_h != s.height) {
        throw UsageError("backbone renders " + std::to_string(bb.out_w) + "x" + std::to_string(bb.out_h) +
                         ", video is " + std::to_string(s.width) + "x" + std::to_string(s.height));
    }
    const auto plan = pipe::partition(video.frames, s.gop, s.gom);
    const auto res = pipe::encode_video(video, plan, bb, s.train, {s.jobs});
    const json manifest = manifest_json(s, bb, crc);

    write_atomic(a.out, res.bitstream);
    write_atomic(a.manifest_out.empty() ? a.out + ".manifest.json" : a.manifest_out, manifest.dump(2) + "\n");
    if (!a.log.empty()) {
        std::string lines = json{{"type", "config"}, {"config", manifest}}.dump() + "\n";
        for (const auto& e : res.epochs) {
            lines += json{{"type", "epoch"}, {"model", e.model}, {"epoch", e.epoch},
                          {"loss_r", e.loss_r}, {"loss_d", e.loss_d}, {"lr", e.lr}}
                         .dump() +
                     "\n";
        }
        for (const auto& m : res.models) {
            lines += json{{"type", "model"},
                          {"model", m.index},
                          {"role", m.role == bs::Role::I ? "I" : "P"},
                          {"epsilon", m.epsilon},
                          {"gap_mse", m.gap_mse},
                          {"payload_bytes", m.payload_bytes},
                          {"estimated_bits", m.estimated_bits},
                          {"train_seconds", m.train_seconds},
                          {"final_mse", m.final_mse}}
                         .dump() +
                     "\n";
        }
        lines += json{{"type", "summary"},
                      {"bytes", res.bitstream.size()},
                      {"bpp", res.bpp},
                      {"psnr", media::capped(res.psnr)},
                      {"seconds", res.seconds}}
                     .dump() +
                 "\n";
        write_atomic(a.log, lines);
    }
    if (!a.csv.empty()) {
        append_csv(a.csv, "sequence,p,m,lambda,bpp,psnr,wall_time",
                   s.sequence + "," + std::to_string(s.gop) + "," + std::to_string(s.gom) + "," +
                       fmt("%.6g", s.train.lambda) + "," + fmt("%.6f", res.bpp) + "," +
                       fmt("%.6f", media::capped(res.psnr)) + "," + fmt("%.3f", res.seconds));
    }
    std::printf("%zu bytes, %.6f bpp, %.6f dB PSNR (RGB), %.1f s\n", res.bitstream.size(), res.bpp,
                media::capped(res.psnr), res.seconds);
    return 0;
}

struct DecodeArgs {
    std::string input, out;
    long long gom = -1;
    bool dump = false;
    unsigned jobs = 1;
};

void setup_decode(CLI::App& app, DecodeArgs& a) {
    auto* sub = app.add_subcommand("decode", "decode a bitstream to raw RGB8 planar frames");
    sub->add_option("-i,--input", a.input)->required();
    sub->add_option("-o,--out", a.out);
    sub->add_option("--gom", a.gom, "decode only this GOM");
    sub->add_flag("--dump-header", a.dump, "print the header as JSON");
    sub->add_option("-j,--jobs", a.jobs)->capture_default_str();
}

int run_decode(DecodeArgs& a) {
    if (a.dump) {
        bs::FileSource src(a.input);
        std::cout << bs::dump_header(bs::read_header(src).header) << '\n';
        if (a.out.empty()) return 0;
    }
    if (a.out.empty()) throw UsageError("decode needs --out");
    if (a.jobs == 0) throw UsageError("--jobs must be at least 1");
    pipe::DecodeResult r;
    if (a.gom >= 0) {
        bs::FileSource src(a.input);
        r = pipe::decode_gom(src, static_cast<std::size_t>(a.gom));
    } else {
        r = pipe::decode_video(read_file(a.input), a.jobs);
    }
    write_atomic(a.out, media::denormalize(r.reconstruction).data);
    std::printf("frames [%zu, %zu) of %zux%zu\n", r.frames.begin, r.frames.end, r.width, r.height);
    return 0;
}

struct SynthArgs {
    std::string kind = "static", out;
    std::size_t width = 32, height = 32, frames = 60;
    double velocity = 1.0;
    std::uint64_t seed = 0;
};

void setup_synth(CLI::App& app, SynthArgs& a) {
    auto* sub = app.add_subcommand("synth", "write a synthetic test sequence");
    sub->add_option("--kind", a.kind, "static, moving-blob, moving-rect, noise-texture-pan")->capture_default_str();
    sub->add_option("-o,--out", a.out)->required();
    sub->add_option("-W,--width", a.width)->capture_default_str();
    sub->add_option("-H,--height", a.height)->capture_default_str();
    sub->add_option("-T,--frames", a.frames)->capture_default_str();
    sub->add_option("--velocity", a.velocity, "pixels per frame")->capture_default_str();
    sub->add_option("--seed", a.seed)->capture_default_str();
}

int run_synth(SynthArgs& a) {
    const auto v = media::synth_video(media::parse_synth_kind(a.kind), a.width, a.height, a.frames, a.velocity, a.seed);
    write_atomic(a.out, v.data);
    std::printf("%zu bytes\n", v.data.size());
    return 0;
}

struct EvalArgs {
    std::string ref, test;
    std::size_t width = 32, height = 32;
    bool per_frame = false;
};

void setup_eval(CLI::App& app, EvalArgs& a) {
    auto* sub = app.add_subcommand("eval", "PSNR (RGB, 8-bit) between two raw videos");
    sub->add_option("--ref", a.ref)->required();
    sub->add_option("--test", a.test)->required();
    sub->add_option("-W,--width", a.width)->capture_default_str();
    sub->add_option("-H,--height", a.height)->capture_default_str();
    sub->add_flag("--per-frame", a.per_frame);
}

int run_eval(EvalArgs& a) {
    const auto r = media::psnr(media::load_raw(a.ref, a.width, a.height), media::load_raw(a.test, a.width, a.height));
    if (a.per_frame) {
        for (std::size_t t = 0; t < r.per_frame.size(); ++t) std::printf("frame %zu %.6f\n", t, media::capped(r.per_frame[t]));
    }
    std::printf("psnr %.6f\n", media::capped(r.mean));
    return 0;
}

struct BdArgs {
    std::string anchor, test;
};

std::vector<media::RDPoint> read_curve(const std::string& path) {
    const auto csv = read_csv(path);
    const auto cb = csv.column({"bpp"}, path);
    const auto cp = csv.column({"psnr"}, path);
    std::vector<media::RDPoint> pts;
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        pts.push_back({cell_double(csv, i, cb, path), cell_double(csv, i, cp, path)});
    return pts;
}

int run_bdrate(BdArgs& a) {
    double v;
    try {
        v = media::bd_rate(read_curve(a.anchor), read_curve(a.test));
    } catch (const media::BdRateError& e) {
        throw DataError(e.what());
    }
    std::printf("%.6f\n", v);
    return 0;
}

struct FitArgs {
    std::string input, out;
    bool unconstrained = false;
};

int run_fit(FitArgs& a) {
    const auto csv = read_csv(a.input);
    const auto cm = csv.column({"mse"}, a.input);
    const auto ce = csv.column({"epsilon", "best_epsilon"}, a.input);
    std::vector<ii::FitPoint> pts;
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        pts.push_back({cell_double(csv, i, cm, a.input), cell_double(csv, i, ce, a.input)});
    ii::FitResult fit;
    try {
        fit = ii::fit_schedule(pts, !a.unconstrained);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    json j = schedule_json(fit.schedule);
    j["residual_norm"] = fit.residual_norm;
    j["degenerate"] = fit.degenerate;
    if (!a.out.empty()) write_atomic(a.out, j.dump(2) + "\n");
    std::printf("a %.17g\nb %.17g\nc %.17g\nresidual %.6g\n", fit.schedule.a, fit.schedule.b, fit.schedule.c,
                fit.residual_norm);
    return 0;
}

int exit_code_for(const std::exception& e) {
    if (const auto* u = dynamic_cast<const Error*>(&e)) return u->exit_code();
    if (dynamic_cast<const std::invalid_argument*>(&e)) return 2;
    if (dynamic_cast<const std::range_error*>(&e) || dynamic_cast<const std::overflow_error*>(&e)) return 4;
    return 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"uarnvc: clip-wise autoregressive neural video codec"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    EncodeArgs enc;
    DecodeArgs dec;
    SynthArgs syn;
    EvalArgs ev;
    BdArgs bd;
    FitArgs fit;
    setup_encode(app, enc);
    setup_decode(app, dec);
    setup_synth(app, syn);
    setup_eval(app, ev);
    auto* bdc = app.add_subcommand("bdrate", "BD-rate (percent) of a test curve against an anchor");
    bdc->add_option("--anchor", bd.anchor, "CSV with bpp,psnr columns")->required();
    bdc->add_option("--test", bd.test, "CSV with bpp,psnr columns")->required();
    auto* fc = app.add_subcommand("fit-epsilon", "fit the epsilon schedule to (mse, epsilon) points");
    fc->add_option("-i,--input", fit.input, "CSV with mse and epsilon (or best_epsilon) columns")->required();
    fc->add_option("-o,--out", fit.out, "schedule JSON");
    fc->add_flag("--unconstrained", fit.unconstrained, "fit the amplitude too (eps(0) may be nonzero)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (app.got_subcommand("encode")) return run_encode(*app.get_subcommand("encode"), enc);
        if (app.got_subcommand("decode")) return run_decode(dec);
        if (app.got_subcommand("synth")) return run_synth(syn);
        if (app.got_subcommand("eval")) return run_eval(ev);
        if (app.got_subcommand("bdrate")) return run_bdrate(bd);
        if (app.got_subcommand("fit-epsilon")) return run_fit(fit);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    }
    return 2;
}
