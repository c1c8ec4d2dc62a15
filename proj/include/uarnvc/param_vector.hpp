// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uarnvc/tensor.hpp"

namespace uarnvc {

struct SegmentSpec {
    std::string name;
    ad::Shape shape;
    std::size_t fan_in = 1;

    bool operator==(const SegmentSpec&) const = default;
};

// Ordered, named segmentation of a flat parameter vector.
using Layout = std::vector<SegmentSpec>;

std::size_t total_count(const Layout& layout);

struct Segment {
    std::string name;
    ad::Tensor tensor;
};

// Per-segment gradients, aligned with a ParamVector.
using Gradients = std::vector<std::vector<ad::Real>>;

class ParamVector {
public:
    ParamVector() = default;
    static ParamVector zeros(const Layout& layout);

    void add(std::string name, ad::Tensor tensor);

    std::size_t segments() const noexcept { return segs_.size(); }
    std::size_t total_count() const noexcept { return total_; }
    const Segment& operator[](std::size_t i) const { return segs_[i]; }
    Segment& operator[](std::size_t i) { return segs_[i]; }
    auto begin() const { return segs_.begin(); }
    auto end() const { return segs_.end(); }

    Layout layout() const;
    bool same_layout(const ParamVector& other) const;
    // Throws std::invalid_argument naming the first differing segment.
    void require_same_layout(const ParamVector& other, const std::string& context) const;

    // Deep copy; the copy shares no storage with *this.
    ParamVector clone() const;
    std::vector<ad::Real> flatten() const;
    void assign_flat(std::span<const ad::Real> values);

    std::vector<ad::Tensor> tensors() const;
    void set_requires_grad(bool on);
    void zero_grad();
    Gradients gradients() const;

    bool operator==(const ParamVector& other) const;

    // Little-endian binary: segment count, then per segment name, shape,
    // fan-in-free values as IEEE doubles.
    std::vector<std::uint8_t> serialize() const;
    static ParamVector deserialize(std::span<const std::uint8_t> bytes);

private:
    std::vector<Segment> segs_;
    std::size_t total_ = 0;
};

} // namespace uarnvc
