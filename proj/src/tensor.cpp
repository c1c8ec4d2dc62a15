// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/tensor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "uarnvc/gaussian.hpp"

namespace uarnvc::ad {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::string to_string(OpKind kind) {
    switch (kind) {
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::conv2d: return "conv2d";
    case OpKind::pixel_shuffle: return "pixel_shuffle";
    case OpKind::upsample_nearest: return "upsample_nearest";
    case OpKind::reshape: return "reshape";
    case OpKind::gelu: return "gelu";
    case OpKind::sin: return "sin";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::exp: return "exp";
    case OpKind::mean_square: return "mean_square";
    case OpKind::sum: return "sum";
    case OpKind::ste_round: return "ste_round";
    case OpKind::gaussian_bits: return "gaussian_bits";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, Real value, bool requires_grad) {
    auto s = std::make_shared<Storage>();
    s->value.assign(numel(shape), value);
    s->shape = std::move(shape);
    s->requires_grad = requires_grad;
    return Tensor(std::move(s));
}

Tensor Tensor::from(Shape shape, std::vector<Real> values, bool requires_grad) {
    if (numel(shape) != values.size()) {
        throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
    }
    auto s = std::make_shared<Storage>();
    s->shape = std::move(shape);
    s->value = std::move(values);
    s->requires_grad = requires_grad;
    return Tensor(std::move(s));
}

Tensor Tensor::scalar(Real value, bool requires_grad) { return filled({1}, value, requires_grad); }

Real Tensor::item() const {
    if (size() != 1) throw ShapeError("item: tensor " + shape_str(shape()) + " is not a scalar");
    return d_->value[0];
}

void Tensor::set_requires_grad(bool on) { d_->requires_grad = on; }

void Tensor::zero_grad() {
    if (!d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
}

std::vector<Real>& Tensor::grad_buffer() const {
    if (d_->grad.empty()) d_->grad.assign(d_->value.size(), 0.0);
    return d_->grad;
}

Tensor Tensor::detach() const { return from(shape(), d_->value, false); }

// ---------------------------------------------------------------------------
// Tape

namespace {

enum class Broadcast { same, scalar, suffix };

Broadcast broadcast_kind(OpKind op, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return Broadcast::same;
    if (b.size() == 1) return Broadcast::scalar;
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin())) return Broadcast::suffix;
    throw ShapeError(to_string(op) + ": cannot broadcast " + shape_str(sb) + " onto " + shape_str(sa));
}

inline std::size_t bidx(Broadcast k, std::size_t i, std::size_t nb) {
    switch (k) {
    case Broadcast::same: return i;
    case Broadcast::scalar: return 0;
    case Broadcast::suffix: return i % nb;
    }
    return i;
}

void require_finite(OpKind op, std::span<const Real> v) {
    for (Real x : v) {
        if (!std::isfinite(x)) throw std::domain_error(to_string(op) + ": non-finite output");
    }
}

} // namespace

void Tape::push(OpKind kind, const Tensor& out, std::function<void()> fn) {
    nodes_.push_back(Node{kind, out, std::move(fn)});
}

Tensor Tape::apply(OpKind kind, std::span<const Tensor> in) {
    auto need = [&](std::size_t n) {
        if (in.size() != n) {
            throw ShapeError(to_string(kind) + ": expected " + std::to_string(n) + " inputs, got " +
                             std::to_string(in.size()));
        }
    };
    switch (kind) {
    case OpKind::matmul: need(2); return matmul(in[0], in[1]);
    case OpKind::add: need(2); return add(in[0], in[1]);
    case OpKind::sub: need(2); return sub(in[0], in[1]);
    case OpKind::mul: need(2); return mul(in[0], in[1]);
    case OpKind::div: need(2); return div(in[0], in[1]);
    case OpKind::conv2d:
        if (in.size() == 2) return conv2d(in[0], in[1]);
        need(3);
        return conv2d(in[0], in[1], in[2]);
    case OpKind::gelu: need(1); return gelu(in[0]);
    case OpKind::sin: need(1); return sin(in[0]);
    case OpKind::sigmoid: need(1); return sigmoid(in[0]);
    case OpKind::exp: need(1); return exp(in[0]);
    case OpKind::mean_square: need(1); return mean_square(in[0]);
    case OpKind::sum: need(1); return sum(in[0]);
    case OpKind::ste_round: need(1); return ste_round(in[0]);
    case OpKind::pixel_shuffle:
    case OpKind::upsample_nearest:
    case OpKind::reshape:
    case OpKind::gaussian_bits:
        throw std::invalid_argument(to_string(kind) + ": requires an attribute; use the typed method");
    }
    throw std::invalid_argument("apply: unknown op");
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    const std::size_t m = a.dim(0), k = b.dim(0), n = b.dim(1);
    Tensor out = Tensor::zeros({m, n}, a.requires_grad() || b.requires_grad());
    auto A = a.data();
    auto B = b.data();
    auto C = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        Real* c = &C[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            const Real av = A[i * k + p];
            const Real* brow = &B[p * n];
            for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
        }
    }
    if (out.requires_grad()) {
        push(OpKind::matmul, out, [a, b, out, m, k, n]() mutable {
            auto G = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad_buffer();
                auto B = b.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        Real s = 0;
                        for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * B[p * n + j];
                        ga[i * k + p] += s;
                    }
            }
            if (b.requires_grad()) {
                auto& gb = b.grad_buffer();
                auto A = a.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const Real av = A[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * G[i * n + j];
                    }
            }
        });
    }
    return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    const auto bk = broadcast_kind(OpKind::add, a, b);
    const std::size_t nb = b.size();
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto A = a.data();
    auto B = b.data();
    auto O = out.data();
    for (std::size_t i = 0; i < O.size(); ++i) O[i] = A[i] + B[bidx(bk, i, nb)];
    if (out.requires_grad()) {
        push(OpKind::add, out, [a, b, out, bk, nb]() mutable {
            auto G = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad_buffer();
                for (std::size_t i = 0; i < G.size(); ++i) ga[i] += G[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad_buffer();
                for (std::size_t i = 0; i < G.size(); ++i) gb[bidx(bk, i, nb)] += G[i];
            }
        });
    }
    return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    const auto bk = broadcast_kind(OpKind::sub, a, b);
    const std::size_t nb = b.size();
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto A = a.data();
    auto B = b.data();
    auto O = out.data();
    for (std::size_t i = 0; i < O.size(); ++i) O[i] = A[i] - B[bidx(bk, i, nb)];
    if (out.requires_grad()) {
        push(OpKind::sub, out, [a, b, out, bk, nb]() mutable {
            auto G = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad_buffer();
                for (std::size_t i = 0; i < G.size(); ++i) ga[i] += G[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad_buffer();
                for (std::size_t i = 0; i < G.size(); ++i) gb[bidx(bk, i, nb)] -= G[i];
            }
        });
    }
    return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    const auto bk = broadcast_kind(OpKind::mul, a, b);
    const std::size_t nb = b.size();
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto A = a.data();
    auto B = b.data();
    auto O = out.data();
    for (std::size_t i = 0; i < O.size(); ++i) O[i] = A[i] * B[bidx(bk, i, nb)];
    if (out.requires_grad()) {
        push(OpKind::mul, out, [a, b, out, bk, nb]() mutable {
            auto G = out.grad();
            auto A = a.data();
            auto B = b.data();
            if (a.requires_grad()) {
                auto& ga = a.grad_buffer();
                for (std::size_t i = 0; i < G.size(); ++i) ga[i] += G[i] * B[bidx(bk, i, nb)];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad_buffer();
                for (std::size_t i = 0; i < G.size(); ++i) gb[bidx(bk, i, nb)] += G[i] * A[i];
            }
        });
    }
    return out;
}

Tensor Tape::div(const Tensor& a, const Tensor& b) {
    const auto bk = broadcast_kind(OpKind::div, a, b);
    const std::size_t nb = b.size();
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto A = a.data();
    auto B = b.data();
    auto O = out.data();
    for (std::size_t i = 0; i < O.size(); ++i) O[i] = A[i] / B[bidx(bk, i, nb)];
    require_finite(OpKind::div, O);
    if (out.requires_grad()) {
        push(OpKind::div, out, [a, b, out, bk, nb]() mutable {
            auto G = out.grad();
            auto B = b.data();
            auto O = out.data();
            if (a.requires_grad()) {
                auto& ga = a.grad_buffer();
                for (std::size_t i = 0; i < G.size(); ++i) ga[i] += G[i] / B[bidx(bk, i, nb)];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad_buffer();
                for (std::size_t i = 0; i < G.size(); ++i) {
                    const std::size_t j = bidx(bk, i, nb);
                    gb[j] -= G[i] * O[i] / B[j];
                }
            }
        });
    }
    return out;
}

Tensor Tape::conv2d(const Tensor& x, const Tensor& w, const Tensor& bias) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    if (xs.size() != 4 || ws.size() != 4 || ws[2] != 3 || ws[3] != 3 || ws[1] != xs[1] ||
        (bias.defined() && (bias.shape().size() != 1 || bias.dim(0) != ws[0]))) {
        throw ShapeError("conv2d: incompatible shapes input " + shape_str(xs) + ", weight " + shape_str(ws) +
                         (bias.defined() ? ", bias " + shape_str(bias.shape()) : std::string{}));
    }
    const std::size_t N = xs[0], Ci = xs[1], H = xs[2], W = xs[3], Co = ws[0];
    const bool rg = x.requires_grad() || w.requires_grad() || (bias.defined() && bias.requires_grad());
    Tensor out = Tensor::zeros({N, Co, H, W}, rg);
    auto X = x.data();
    auto Wt = w.data();
    auto O = out.data();
    const std::size_t plane = H * W;

    // Visits every (output pixel, input pixel, weight) triple of the valid
    // region for one kernel tap.
    auto for_tap = [H, W](std::size_t ky, std::size_t kx, auto&& row_fn) {
        const long dy = static_cast<long>(ky) - 1;
        const long dx = static_cast<long>(kx) - 1;
        const std::size_t y0 = dy < 0 ? 1 : 0;
        const std::size_t y1 = dy > 0 ? H - 1 : H;
        const std::size_t x0 = dx < 0 ? 1 : 0;
        const std::size_t x1 = dx > 0 ? W - 1 : W;
        if (y1 <= y0 || x1 <= x0) return;
        for (std::size_t y = y0; y < y1; ++y) {
            const std::size_t iy = static_cast<std::size_t>(static_cast<long>(y) + dy);
            row_fn(y * W + x0, iy * W + static_cast<std::size_t>(static_cast<long>(x0) + dx), x1 - x0);
        }
    };

    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t co = 0; co < Co; ++co) {
            Real* o = &O[(n * Co + co) * plane];
            if (bias.defined()) {
                const Real bv = bias[co];
                for (std::size_t i = 0; i < plane; ++i) o[i] = bv;
            }
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const Real* in = &X[(n * Ci + ci) * plane];
                for (std::size_t ky = 0; ky < 3; ++ky)
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        const Real wv = Wt[((co * Ci + ci) * 3 + ky) * 3 + kx];
                        for_tap(ky, kx, [&](std::size_t oo, std::size_t io, std::size_t len) {
                            for (std::size_t j = 0; j < len; ++j) o[oo + j] += wv * in[io + j];
                        });
                    }
            }
        }
    }
    if (rg) {
        push(OpKind::conv2d, out, [x, w, bias, out, N, Ci, Co, plane, for_tap]() mutable {
            auto G = out.grad();
            auto X = x.data();
            auto Wt = w.data();
            std::vector<Real>* gx = x.requires_grad() ? &x.grad_buffer() : nullptr;
            std::vector<Real>* gw = w.requires_grad() ? &w.grad_buffer() : nullptr;
            if (bias.defined() && bias.requires_grad()) {
                auto& gb = bias.grad_buffer();
                for (std::size_t n = 0; n < N; ++n)
                    for (std::size_t co = 0; co < Co; ++co) {
                        const Real* g = &G[(n * Co + co) * plane];
                        Real s = 0;
                        for (std::size_t i = 0; i < plane; ++i) s += g[i];
                        gb[co] += s;
                    }
            }
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t co = 0; co < Co; ++co) {
                    const Real* g = &G[(n * Co + co) * plane];
                    for (std::size_t ci = 0; ci < Ci; ++ci) {
                        const Real* in = &X[(n * Ci + ci) * plane];
                        Real* gin = gx ? &(*gx)[(n * Ci + ci) * plane] : nullptr;
                        for (std::size_t ky = 0; ky < 3; ++ky)
                            for (std::size_t kx = 0; kx < 3; ++kx) {
                                const std::size_t widx = ((co * Ci + ci) * 3 + ky) * 3 + kx;
                                const Real wv = Wt[widx];
                                Real acc = 0;
                                for_tap(ky, kx, [&](std::size_t oo, std::size_t io, std::size_t len) {
                                    if (gin)
                                        for (std::size_t j = 0; j < len; ++j) gin[io + j] += wv * g[oo + j];
                                    for (std::size_t j = 0; j < len; ++j) acc += in[io + j] * g[oo + j];
                                });
                                if (gw) (*gw)[widx] += acc;
                            }
                    }
                }
        });
    }
    return out;
}

Tensor Tape::pixel_shuffle(const Tensor& x, std::size_t r) {
    const auto& xs = x.shape();
    if (xs.size() != 4 || r == 0 || xs[1] % (r * r) != 0) {
        throw ShapeError("pixel_shuffle: input " + shape_str(xs) + " not divisible by r^2 with r=" +
                         std::to_string(r));
    }
    const std::size_t N = xs[0], C = xs[1] / (r * r), H = xs[2], W = xs[3];
    Tensor out = Tensor::zeros({N, C, H * r, W * r}, x.requires_grad());
    // out[n, c, h*r+i, w*r+j] = in[n, c*r*r + i*r + j, h, w]
    std::vector<std::size_t> map(out.size());
    auto X = x.data();
    auto O = out.data();
    std::size_t o = 0;
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t oy = 0; oy < H * r; ++oy)
                for (std::size_t ox = 0; ox < W * r; ++ox, ++o) {
                    const std::size_t ic = c * r * r + (oy % r) * r + (ox % r);
                    map[o] = ((n * xs[1] + ic) * H + oy / r) * W + ox / r;
                    O[o] = X[map[o]];
                }
    if (out.requires_grad()) {
        push(OpKind::pixel_shuffle, out, [x, out, map = std::move(map)]() mutable {
            auto G = out.grad();
            auto& gx = x.grad_buffer();
            for (std::size_t i = 0; i < G.size(); ++i) gx[map[i]] += G[i];
        });
    }
    return out;
}

Tensor Tape::upsample_nearest(const Tensor& x, std::size_t r) {
    const auto& xs = x.shape();
    if (xs.size() != 4 || r == 0) {
        throw ShapeError("upsample_nearest: input " + shape_str(xs) + " with r=" + std::to_string(r));
    }
    const std::size_t NC = xs[0] * xs[1], H = xs[2], W = xs[3];
    Tensor out = Tensor::zeros({xs[0], xs[1], H * r, W * r}, x.requires_grad());
    auto X = x.data();
    auto O = out.data();
    const std::size_t ow = W * r;
    for (std::size_t p = 0; p < NC; ++p)
        for (std::size_t oy = 0; oy < H * r; ++oy) {
            const Real* in = &X[(p * H + oy / r) * W];
            Real* o = &O[(p * H * r + oy) * ow];
            for (std::size_t ox = 0; ox < ow; ++ox) o[ox] = in[ox / r];
        }
    if (out.requires_grad()) {
        push(OpKind::upsample_nearest, out, [x, out, NC, H, W, r]() mutable {
            auto G = out.grad();
            auto& gx = x.grad_buffer();
            const std::size_t ow = W * r;
            for (std::size_t p = 0; p < NC; ++p)
                for (std::size_t oy = 0; oy < H * r; ++oy) {
                    Real* gi = &gx[(p * H + oy / r) * W];
                    const Real* g = &G[(p * H * r + oy) * ow];
                    for (std::size_t ox = 0; ox < ow; ++ox) gi[ox / r] += g[ox];
                }
        });
    }
    return out;
}

Tensor Tape::reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size()) {
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    }
    Tensor out = Tensor::from(std::move(shape), std::vector<Real>(x.data().begin(), x.data().end()),
                              x.requires_grad());
    if (out.requires_grad()) {
        push(OpKind::reshape, out, [x, out]() mutable {
            auto G = out.grad();
            auto& gx = x.grad_buffer();
            for (std::size_t i = 0; i < G.size(); ++i) gx[i] += G[i];
        });
    }
    return out;
}

template <typename F, typename DF>
Tensor Tape::unary(OpKind kind, const Tensor& x, F f, DF df) {
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    auto X = x.data();
    auto O = out.data();
    for (std::size_t i = 0; i < O.size(); ++i) O[i] = f(X[i]);
    require_finite(kind, O);
    if (out.requires_grad()) {
        push(kind, out, [x, out, df]() mutable {
            auto G = out.grad();
            auto X = x.data();
            auto O = out.data();
            auto& gx = x.grad_buffer();
            for (std::size_t i = 0; i < G.size(); ++i) gx[i] += G[i] * df(X[i], O[i]);
        });
    }
    return out;
}

Tensor Tape::gelu(const Tensor& x) {
    constexpr Real kInvSqrt2 = 0.70710678118654752440;
    constexpr Real kInvSqrt2Pi = 0.39894228040143267794;
    return unary(
        OpKind::gelu, x, [](Real v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
        [](Real v, Real) { return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) + v * kInvSqrt2Pi * std::exp(-0.5 * v * v); });
}

Tensor Tape::sin(const Tensor& x) {
    return unary(
        OpKind::sin, x, [](Real v) { return std::sin(v); }, [](Real v, Real) { return std::cos(v); });
}

Tensor Tape::sigmoid(const Tensor& x) {
    return unary(
        OpKind::sigmoid, x,
        [](Real v) {
            if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
            const Real e = std::exp(v);
            return e / (1.0 + e);
        },
        [](Real, Real y) { return y * (1.0 - y); });
}

Tensor Tape::exp(const Tensor& x) {
    return unary(
        OpKind::exp, x, [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

Tensor Tape::ste_round(const Tensor& x) {
    return unary(
        OpKind::ste_round, x, [](Real v) { return std::round(v); }, [](Real, Real) { return 1.0; });
}

Tensor Tape::mean_square(const Tensor& x) {
    const std::size_t n = x.size();
    if (n == 0) throw ShapeError("mean_square: empty tensor");
    Real s = 0;
    for (Real v : x.data()) s += v * v;
    Tensor out = Tensor::scalar(s / static_cast<Real>(n), x.requires_grad());
    if (out.requires_grad()) {
        push(OpKind::mean_square, out, [x, out, n]() mutable {
            const Real g = out.grad()[0] * 2.0 / static_cast<Real>(n);
            auto X = x.data();
            auto& gx = x.grad_buffer();
            for (std::size_t i = 0; i < n; ++i) gx[i] += g * X[i];
        });
    }
    return out;
}

Tensor Tape::sum(const Tensor& x) {
    Real s = 0;
    for (Real v : x.data()) s += v;
    Tensor out = Tensor::scalar(s, x.requires_grad());
    if (out.requires_grad()) {
        push(OpKind::sum, out, [x, out]() mutable {
            const Real g = out.grad()[0];
            auto& gx = x.grad_buffer();
            for (auto& v : gx) v += g;
        });
    }
    return out;
}

Tensor Tape::gaussian_bits(const Tensor& y, Real mu, Real sigma) {
    if (!(sigma > 0)) throw std::domain_error("gaussian_bits: sigma must be positive");
    auto Y = y.data();
    std::vector<Real> slope(y.requires_grad() ? Y.size() : 0);
    Real bits = 0;
    for (std::size_t i = 0; i < Y.size(); ++i) {
        const auto m = gauss::bin_log_mass(Y[i], mu, sigma);
        bits -= m.log_mass;
        if (!slope.empty()) slope[i] = -m.d_log_mass / std::numbers::ln2;
    }
    bits /= std::numbers::ln2;
    if (!std::isfinite(bits)) throw std::domain_error("gaussian_bits: non-finite likelihood");
    Tensor out = Tensor::scalar(bits, y.requires_grad());
    if (out.requires_grad()) {
        push(OpKind::gaussian_bits, out, [y, out, slope = std::move(slope)]() mutable {
            const Real g = out.grad()[0];
            auto& gy = y.grad_buffer();
            for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += g * slope[i];
        });
    }
    return out;
}

void Tape::backward(const Tensor& loss) {
    if (consumed_) throw std::logic_error("backward: tape already replayed");
    if (!loss.defined() || loss.size() != 1) {
        throw ShapeError("backward: loss must be a scalar, got " +
                         (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
    }
    consumed_ = true;
    if (!loss.requires_grad()) return;
    loss.grad_buffer()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (!it->output.has_grad()) continue;  // not on a path to the loss
        it->backward();
    }
    nodes_.clear();
}

} // namespace uarnvc::ad
