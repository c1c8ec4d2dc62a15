// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Dense tensors with a reverse-mode tape.
//
// A Tensor is a shared handle; copies alias the same storage. Every op on a
// Tape allocates a fresh output and appends a backward rule. Gradients live
// next to the values and are accumulated by Tape::backward.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uarnvc::ad {

// All tensors use one precision, fixed at build time.
using Real = double;
using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor filled(Shape shape, Real value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
    static Tensor scalar(Real value, bool requires_grad = false);

    bool defined() const noexcept { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    std::size_t size() const { return d_->value.size(); }
    std::size_t dim(std::size_t i) const { return d_->shape.at(i); }

    std::span<Real> data() { return d_->value; }
    std::span<const Real> data() const { return d_->value; }
    Real item() const;
    Real operator[](std::size_t i) const { return d_->value[i]; }

    bool requires_grad() const { return d_->requires_grad; }
    void set_requires_grad(bool on);

    // Empty span until a gradient has been accumulated.
    std::span<Real> grad() { return d_->grad; }
    std::span<const Real> grad() const { return d_->grad; }
    bool has_grad() const { return !d_->grad.empty(); }
    void zero_grad();

    // Deep copy without gradient or tape history.
    Tensor detach() const;

    bool same_storage(const Tensor& other) const { return d_ == other.d_; }

private:
    friend class Tape;
    struct Storage {
        Shape shape;
        std::vector<Real> value;
        std::vector<Real> grad;
        bool requires_grad = false;
    };
    explicit Tensor(std::shared_ptr<Storage> d) : d_(std::move(d)) {}
    std::vector<Real>& grad_buffer() const;

    std::shared_ptr<Storage> d_;
};

enum class OpKind {
    matmul,
    add,
    sub,
    mul,
    div,
    conv2d,
    pixel_shuffle,
    upsample_nearest,
    reshape,
    gelu,
    sin,
    sigmoid,
    exp,
    mean_square,
    sum,
    ste_round,
    gaussian_bits,
};

std::string to_string(OpKind kind);

// Records executed ops in topological order. One Tape per training step;
// backward may be replayed only once.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    // Generic entry point. Integer attributes (conv padding is fixed; the
    // pixel-shuffle / upsample factor, the reshape target) go through the
    // typed methods below; apply() covers the attribute-free kinds.
    Tensor apply(OpKind kind, std::span<const Tensor> inputs);

    // [M,K] x [K,N] -> [M,N]
    Tensor matmul(const Tensor& a, const Tensor& b);

    // Elementwise with broadcasting of `b` when it is a single element or a
    // suffix of `a`'s shape (e.g. bias [N] onto [M,N]).
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor div(const Tensor& a, const Tensor& b);

    // 3x3 kernel, stride 1, zero padding 1. x: [N,Cin,H,W], w: [Cout,Cin,3,3],
    // bias: [Cout] or undefined.
    Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias = {});
    // [N, C*r*r, H, W] -> [N, C, H*r, W*r]
    Tensor pixel_shuffle(const Tensor& x, std::size_t r);
    // [N, C, H, W] -> [N, C, H*r, W*r]
    Tensor upsample_nearest(const Tensor& x, std::size_t r);
    Tensor reshape(const Tensor& x, Shape shape);

    Tensor gelu(const Tensor& x);
    Tensor sin(const Tensor& x);
    Tensor sigmoid(const Tensor& x);
    Tensor exp(const Tensor& x);
    // Rounds half away from zero; gradient passes straight through.
    Tensor ste_round(const Tensor& x);

    // Scalar reductions.
    Tensor mean_square(const Tensor& x);
    Tensor sum(const Tensor& x);

    // Scalar: sum over elements of -log2 of the unit-bin mass of N(mu, sigma^2)
    // centred at each element. mu and sigma are constants.
    Tensor gaussian_bits(const Tensor& y, Real mu, Real sigma);

    // Accumulates d(loss)/d(x) into every grad-required tensor reachable from
    // `loss`. Throws if `loss` is not a scalar or the tape was already replayed.
    void backward(const Tensor& loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool consumed() const noexcept { return consumed_; }

private:
    struct Node {
        OpKind kind;
        Tensor output;
        std::function<void()> backward;
    };
    void push(OpKind kind, const Tensor& out, std::function<void()> fn);
    // f: x -> y, df: (x, y) -> dy/dx
    template <typename F, typename DF>
    Tensor unary(OpKind kind, const Tensor& x, F f, DF df);

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

} // namespace uarnvc::ad
