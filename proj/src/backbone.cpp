// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/backbone.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "uarnvc/error.hpp"
#include "uarnvc/rng.hpp"

namespace uarnvc::inr {

namespace {

std::string kind_name(BackboneKind k) { return k == BackboneKind::nerv_lite ? "nerv-lite" : "coord-mlp"; }
std::string act_name(Activation a) { return a == Activation::gelu ? "gelu" : "sin"; }
std::string up_name(Upsample u) { return u == Upsample::nearest ? "nearest" : "pixel-shuffle"; }

std::size_t pe_dim(const BackboneConfig& cfg) { return 2 * cfg.pe_freqs; }

std::vector<ad::Real> positional_encoding(double v, std::size_t freqs) {
    std::vector<ad::Real> pe(2 * freqs);
    for (std::size_t j = 0; j < freqs; ++j) {
        const double w = std::ldexp(std::numbers::pi, static_cast<int>(j)) * v;
        pe[2 * j] = std::sin(w);
        pe[2 * j + 1] = std::cos(w);
    }
    return pe;
}

ad::Tensor activate(ad::Tape& tape, Activation a, const ad::Tensor& x) {
    return a == Activation::gelu ? tape.gelu(x) : tape.sin(x);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long n = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ConfigError("backbone config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
    }
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& key, const std::string& v) {
    const auto x = v.find('x');
    if (x == std::string::npos) throw ConfigError("backbone config: key '" + key + "' expects HxW, got '" + v + "'");
    return {parse_size(key, v.substr(0, x)), parse_size(key, v.substr(x + 1))};
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

} // namespace

void validate(const BackboneConfig& cfg) {
    if (cfg.pe_freqs == 0) throw ConfigError("backbone config: pe_freqs must be positive");
    if (cfg.out_h == 0 || cfg.out_w == 0) throw ConfigError("backbone config: frame size must be positive");
    if (cfg.kind == BackboneKind::coord_mlp) {
        if (cfg.mlp_widths.empty()) throw ConfigError("backbone config: coord-mlp needs at least one layer width");
        for (std::size_t i = 0; i < cfg.mlp_widths.size(); ++i) {
            if (cfg.mlp_widths[i] == 0) throw ConfigError("backbone config: mlp width " + std::to_string(i) + " is zero");
        }
        if (cfg.mlp_widths.back() != 3) throw ConfigError("backbone config: coord-mlp output width must be 3");
        return;
    }
    if (cfg.stem_width == 0 || cfg.base_c == 0 || cfg.base_h == 0 || cfg.base_w == 0) {
        throw ConfigError("backbone config: stem and base feature-map sizes must be positive");
    }
    if (cfg.stages.empty()) throw ConfigError("backbone config: nerv-lite needs at least one upsample stage");
    std::size_t h = cfg.base_h;
    std::size_t w = cfg.base_w;
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        const auto& s = cfg.stages[i];
        if (s.scale == 0 || s.width == 0) {
            throw ConfigError("backbone config: upsample stage " + std::to_string(i) + " has a zero scale or width");
        }
        h *= s.scale;
        w *= s.scale;
        if (h > cfg.out_h || w > cfg.out_w) {
            throw ConfigError("backbone config: upsample stage " + std::to_string(i) + " overshoots the frame size (" +
                              std::to_string(h) + "x" + std::to_string(w) + " > " + std::to_string(cfg.out_h) + "x" +
                              std::to_string(cfg.out_w) + ")");
        }
    }
    if (h != cfg.out_h || w != cfg.out_w) {
        throw ConfigError("backbone config: upsample stage " + std::to_string(cfg.stages.size() - 1) + " ends at " +
                          std::to_string(h) + "x" + std::to_string(w) + ", frame is " + std::to_string(cfg.out_h) +
                          "x" + std::to_string(cfg.out_w));
    }
}

std::string to_text(const BackboneConfig& cfg) {
    std::ostringstream os;
    os << "kind=" << kind_name(cfg.kind) << '\n';
    os << "pe_freqs=" << cfg.pe_freqs << '\n';
    os << "activation=" << act_name(cfg.activation) << '\n';
    os << "frame=" << cfg.out_h << 'x' << cfg.out_w << '\n';
    if (cfg.kind == BackboneKind::nerv_lite) {
        os << "stem_width=" << cfg.stem_width << '\n';
        os << "base=" << cfg.base_c << 'x' << cfg.base_h << 'x' << cfg.base_w << '\n';
        os << "stages=";
        for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
            if (i) os << ',';
            os << cfg.stages[i].scale << ':' << cfg.stages[i].width;
        }
        os << '\n';
        os << "upsample=" << up_name(cfg.upsample) << '\n';
    } else {
        os << "mlp=";
        for (std::size_t i = 0; i < cfg.mlp_widths.size(); ++i) {
            if (i) os << ',';
            os << cfg.mlp_widths[i];
        }
        os << '\n';
    }
    return os.str();
}

BackboneConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("backbone config: line " + std::to_string(lineno) + " has no '='");
        auto key = line.substr(0, eq);
        if (!kv.emplace(key, line.substr(eq + 1)).second) throw ConfigError("backbone config: duplicate key '" + key + "'");
    }
    auto take = [&](const std::string& key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("backbone config: missing key '" + key + "'");
        auto v = it->second;
        kv.erase(it);
        return v;
    };

    BackboneConfig cfg;
    const auto kind = take("kind");
    if (kind == "nerv-lite")
        cfg.kind = BackboneKind::nerv_lite;
    else if (kind == "coord-mlp")
        cfg.kind = BackboneKind::coord_mlp;
    else
        throw ConfigError("backbone config: unknown kind '" + kind + "'");
    cfg.pe_freqs = parse_size("pe_freqs", take("pe_freqs"));
    const auto act = take("activation");
    if (act == "gelu")
        cfg.activation = Activation::gelu;
    else if (act == "sin")
        cfg.activation = Activation::sin;
    else
        throw ConfigError("backbone config: unknown activation '" + act + "'");
    std::tie(cfg.out_h, cfg.out_w) = parse_dims("frame", take("frame"));

    if (cfg.kind == BackboneKind::nerv_lite) {
        cfg.stem_width = parse_size("stem_width", take("stem_width"));
        const auto base = split(take("base"), 'x');
        if (base.size() != 3) throw ConfigError("backbone config: base expects CxHxW");
        cfg.base_c = parse_size("base", base[0]);
        cfg.base_h = parse_size("base", base[1]);
        cfg.base_w = parse_size("base", base[2]);
        for (const auto& st : split(take("stages"), ',')) {
            const auto c = st.find(':');
            if (c == std::string::npos) throw ConfigError("backbone config: stage '" + st + "' expects scale:width");
            cfg.stages.push_back({parse_size("stages", st.substr(0, c)), parse_size("stages", st.substr(c + 1))});
        }
        const auto up = take("upsample");
        if (up == "nearest")
            cfg.upsample = Upsample::nearest;
        else if (up == "pixel-shuffle")
            cfg.upsample = Upsample::pixel_shuffle;
        else
            throw ConfigError("backbone config: unknown upsample '" + up + "'");
    } else {
        for (const auto& w : split(take("mlp"), ',')) cfg.mlp_widths.push_back(parse_size("mlp", w));
    }
    if (!kv.empty()) throw ConfigError("backbone config: unknown key '" + kv.begin()->first + "'");
    validate(cfg);
    return cfg;
}

namespace {

BackboneConfig nerv_preset(std::size_t h, std::size_t w, std::size_t stem, std::size_t ch, const std::string& name) {
    if (h % 8 != 0 || w % 8 != 0) {
        throw ConfigError("preset '" + name + "' needs frame dimensions divisible by 8, got " + std::to_string(h) + "x" +
                          std::to_string(w));
    }
    BackboneConfig cfg;
    cfg.kind = BackboneKind::nerv_lite;
    cfg.pe_freqs = 8;
    cfg.out_h = h;
    cfg.out_w = w;
    cfg.stem_width = stem;
    cfg.base_c = ch;
    cfg.base_h = h / 8;
    cfg.base_w = w / 8;
    cfg.stages = {{2, ch}, {2, ch}, {2, ch}};
    return cfg;
}

// Channel width whose parameter count lands closest to `megabytes` of 32-bit
// values.
BackboneConfig sized_preset(std::size_t h, std::size_t w, double megabytes, const std::string& name) {
    const double target = megabytes * 1e6 / 4.0;
    BackboneConfig best;
    double best_err = 1e300;
    for (std::size_t ch = 4; ch <= 512; ch += 2) {
        auto cfg = nerv_preset(h, w, 4 * ch, ch, name);
        const double err = std::abs(static_cast<double>(total_count(param_layout(cfg))) - target);
        if (err < best_err) {
            best_err = err;
            best = cfg;
        }
    }
    return best;
}

const std::vector<std::pair<std::string, double>>& sized_presets() {
    static const std::vector<std::pair<std::string, double>> v = {
        {"nerv-0.3mb", 0.3}, {"nerv-0.45mb", 0.45}, {"nerv-0.6mb", 0.6}, {"nerv-0.9mb", 0.9}, {"nerv-1.8mb", 1.8},
        {"nerv-2.7mb", 2.7}, {"nerv-3mb", 3.0},     {"nerv-4.5mb", 4.5}, {"nerv-6mb", 6.0},   {"nerv-9mb", 9.0},
    };
    return v;
}

} // namespace

BackboneConfig preset(const std::string& name, std::size_t h, std::size_t w) {
    if (name == "nerv-tiny") return nerv_preset(h, w, 32, 8, name);
    if (name == "nerv-small") return nerv_preset(h, w, 48, 12, name);
    if (name == "nerv-medium") return nerv_preset(h, w, 64, 16, name);
    if (name == "coord-mlp-small") {
        BackboneConfig cfg;
        cfg.kind = BackboneKind::coord_mlp;
        cfg.pe_freqs = 6;
        cfg.out_h = h;
        cfg.out_w = w;
        cfg.mlp_widths = {64, 64, 3};
        return cfg;
    }
    for (const auto& [n, mb] : sized_presets()) {
        if (n == name) return sized_preset(h, w, mb, name);
    }
    throw ConfigError("unknown backbone preset '" + name + "'");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names = {"nerv-tiny", "nerv-small", "nerv-medium", "coord-mlp-small"};
    for (const auto& [n, mb] : sized_presets()) names.push_back(n);
    return names;
}

Layout param_layout(const BackboneConfig& cfg) {
    validate(cfg);
    Layout l;
    auto linear = [&l](const std::string& prefix, std::size_t in, std::size_t out) {
        l.push_back({prefix + ".weight", {in, out}, in});
        l.push_back({prefix + ".bias", {out}, in});
    };
    auto conv = [&l](const std::string& prefix, std::size_t in, std::size_t out) {
        l.push_back({prefix + ".weight", {out, in, 3, 3}, in * 9});
        l.push_back({prefix + ".bias", {out}, in * 9});
    };
    if (cfg.kind == BackboneKind::coord_mlp) {
        std::size_t in = 3 * pe_dim(cfg);
        for (std::size_t i = 0; i < cfg.mlp_widths.size(); ++i) {
            linear("mlp." + std::to_string(i), in, cfg.mlp_widths[i]);
            in = cfg.mlp_widths[i];
        }
        return l;
    }
    linear("stem.0", pe_dim(cfg), cfg.stem_width);
    linear("stem.1", cfg.stem_width, cfg.base_c * cfg.base_h * cfg.base_w);
    std::size_t c = cfg.base_c;
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        const auto& s = cfg.stages[i];
        const std::size_t out = cfg.upsample == Upsample::pixel_shuffle ? s.width * s.scale * s.scale : s.width;
        conv("stage." + std::to_string(i), c, out);
        c = s.width;
    }
    conv("head", c, 3);
    return l;
}

ParamVector init_random(const BackboneConfig& cfg, std::uint64_t seed) {
    const auto layout = param_layout(cfg);
    Rng rng(seed);
    ParamVector pv;
    for (const auto& s : layout) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
        std::vector<ad::Real> v(ad::numel(s.shape));
        for (auto& x : v) x = rng.normal() * scale;
        pv.add(s.name, ad::Tensor::from(s.shape, std::move(v)));
    }
    return pv;
}

ad::Tensor forward(ad::Tape& tape, const BackboneConfig& cfg, const std::vector<ad::Tensor>& p, double t) {
    const auto layout = param_layout(cfg);
    if (p.size() != layout.size()) {
        throw std::invalid_argument("forward: expected " + std::to_string(layout.size()) + " parameter segments, got " +
                                    std::to_string(p.size()));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].shape() != layout[i].shape) {
            throw std::invalid_argument("forward: segment '" + layout[i].name + "' has shape " +
                                        ad::shape_str(p[i].shape()) + ", expected " + ad::shape_str(layout[i].shape));
        }
    }
    auto check = [&](const ad::Tensor& x, const std::string& where) {
        for (auto v : x.data()) {
            if (!std::isfinite(v)) throw NumericError("forward: non-finite activation after layer '" + where + "'");
        }
        return x;
    };
    // Ops reject non-finite outputs themselves; attach the layer name.
    auto layer = [&](const std::string& where, auto&& fn) -> ad::Tensor {
        try {
            return check(fn(), where);
        } catch (const std::domain_error& e) {
            throw NumericError("forward: layer '" + where + "': " + e.what());
        }
    };

    if (cfg.kind == BackboneKind::coord_mlp) {
        const std::size_t H = cfg.out_h, W = cfg.out_w, d = pe_dim(cfg);
        std::vector<ad::Real> in(H * W * 3 * d);
        const auto pt = positional_encoding(t, cfg.pe_freqs);
        for (std::size_t y = 0; y < H; ++y) {
            const auto py = positional_encoding((static_cast<double>(y) + 0.5) / static_cast<double>(H), cfg.pe_freqs);
            for (std::size_t x = 0; x < W; ++x) {
                const auto px = positional_encoding((static_cast<double>(x) + 0.5) / static_cast<double>(W), cfg.pe_freqs);
                ad::Real* row = &in[(y * W + x) * 3 * d];
                std::copy(px.begin(), px.end(), row);
                std::copy(py.begin(), py.end(), row + d);
                std::copy(pt.begin(), pt.end(), row + 2 * d);
            }
        }
        ad::Tensor h = ad::Tensor::from({H * W, 3 * d}, std::move(in));
        const std::size_t n = cfg.mlp_widths.size();
        for (std::size_t i = 0; i < n; ++i) {
            h = layer(layout[2 * i].name, [&] {
                auto z = tape.add(tape.matmul(h, p[2 * i]), p[2 * i + 1]);
                return i + 1 < n ? activate(tape, cfg.activation, z) : tape.sigmoid(z);
            });
        }
        return h;
    }

    ad::Tensor h = ad::Tensor::from({1, pe_dim(cfg)}, positional_encoding(t, cfg.pe_freqs));
    h = layer(layout[0].name, [&] { return activate(tape, cfg.activation, tape.add(tape.matmul(h, p[0]), p[1])); });
    h = layer(layout[2].name, [&] { return activate(tape, cfg.activation, tape.add(tape.matmul(h, p[2]), p[3])); });
    h = tape.reshape(h, {1, cfg.base_c, cfg.base_h, cfg.base_w});
    std::size_t k = 4;
    for (const auto& s : cfg.stages) {
        h = layer(layout[k].name, [&] {
            auto z = cfg.upsample == Upsample::nearest
                         ? tape.conv2d(tape.upsample_nearest(h, s.scale), p[k], p[k + 1])
                         : tape.pixel_shuffle(tape.conv2d(h, p[k], p[k + 1]), s.scale);
            return activate(tape, cfg.activation, z);
        });
        k += 2;
    }
    return layer(layout[k].name, [&] { return tape.sigmoid(tape.conv2d(h, p[k], p[k + 1])); });
}

ad::Tensor target_tensor(const BackboneConfig& cfg, const Frame& f) {
    if (f.width != cfg.out_w || f.height != cfg.out_h) {
        throw std::invalid_argument("target_tensor: frame " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                                    " does not match model output " + std::to_string(cfg.out_h) + "x" +
                                    std::to_string(cfg.out_w));
    }
    if (cfg.kind == BackboneKind::nerv_lite) return ad::Tensor::from({1, 3, f.height, f.width}, f.planes);
    const std::size_t n = f.plane_size();
    std::vector<ad::Real> v(3 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 3; ++c) v[i * 3 + c] = f.planes[c * n + i];
    return ad::Tensor::from({n, 3}, std::move(v));
}

Frame to_frame(const BackboneConfig& cfg, const ad::Tensor& out) {
    Frame f(cfg.out_w, cfg.out_h);
    auto d = out.data();
    if (cfg.kind == BackboneKind::nerv_lite) {
        std::copy(d.begin(), d.end(), f.planes.begin());
        return f;
    }
    const std::size_t n = f.plane_size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 3; ++c) f.planes[c * n + i] = d[i * 3 + c];
    return f;
}

Frame forward_frame(const BackboneConfig& cfg, const ParamVector& params, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("forward_frame: timestamp outside [0,1]");
    ad::Tape tape;
    std::vector<ad::Tensor> p;
    for (const auto& s : params) p.push_back(s.tensor.detach());
    return to_frame(cfg, forward(tape, cfg, p, t));
}

Frame forward_frame(const ModelInstance& model, double t) { return forward_frame(model.config, model.params, t); }

double timestamp(std::size_t index, std::size_t gop_length) {
    if (gop_length <= 1) return 0.0;
    return static_cast<double>(index) / static_cast<double>(gop_length - 1);
}

std::size_t activation_count(const BackboneConfig& cfg) {
    const auto layout = param_layout(cfg);
    std::size_t acts = 0;
    if (cfg.kind == BackboneKind::coord_mlp) {
        const std::size_t px = cfg.out_h * cfg.out_w;
        acts += px * 3 * pe_dim(cfg);
        for (auto w : cfg.mlp_widths) acts += 2 * px * w;  // pre- and post-activation
        return acts;
    }
    acts += pe_dim(cfg) + 2 * cfg.stem_width + 2 * cfg.base_c * cfg.base_h * cfg.base_w;
    std::size_t h = cfg.base_h, w = cfg.base_w;
    for (const auto& s : cfg.stages) {
        const std::size_t ph = h * s.scale, pw = w * s.scale;
        const std::size_t conv_out = cfg.upsample == Upsample::pixel_shuffle ? s.width * s.scale * s.scale * h * w
                                                                             : s.width * ph * pw;
        acts += conv_out + 2 * s.width * ph * pw;
        h = ph;
        w = pw;
    }
    acts += 2 * 3 * h * w;
    return acts;
}

} // namespace uarnvc::inr
