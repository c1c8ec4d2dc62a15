// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/param_vector.hpp"

#include <stdexcept>

#include "uarnvc/bytes.hpp"

namespace uarnvc {

std::size_t total_count(const Layout& layout) {
    std::size_t n = 0;
    for (const auto& s : layout) n += ad::numel(s.shape);
    return n;
}

ParamVector ParamVector::zeros(const Layout& layout) {
    ParamVector pv;
    for (const auto& s : layout) pv.add(s.name, ad::Tensor::zeros(s.shape));
    return pv;
}

void ParamVector::add(std::string name, ad::Tensor tensor) {
    for (const auto& s : segs_) {
        if (s.name == name) throw std::invalid_argument("param vector: duplicate segment '" + name + "'");
    }
    total_ += tensor.size();
    segs_.push_back(Segment{std::move(name), std::move(tensor)});
}

Layout ParamVector::layout() const {
    Layout l;
    l.reserve(segs_.size());
    for (const auto& s : segs_) l.push_back(SegmentSpec{s.name, s.tensor.shape(), 1});
    return l;
}

bool ParamVector::same_layout(const ParamVector& other) const {
    if (segs_.size() != other.segs_.size()) return false;
    for (std::size_t i = 0; i < segs_.size(); ++i) {
        if (segs_[i].name != other.segs_[i].name || segs_[i].tensor.shape() != other.segs_[i].tensor.shape())
            return false;
    }
    return true;
}

void ParamVector::require_same_layout(const ParamVector& other, const std::string& context) const {
    const std::size_t n = std::min(segs_.size(), other.segs_.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = segs_[i];
        const auto& b = other.segs_[i];
        if (a.name != b.name || a.tensor.shape() != b.tensor.shape()) {
            throw std::invalid_argument(context + ": layout mismatch at segment '" + a.name + "' " +
                                        ad::shape_str(a.tensor.shape()) + " vs '" + b.name + "' " +
                                        ad::shape_str(b.tensor.shape()));
        }
    }
    if (segs_.size() != other.segs_.size()) {
        const auto& extra = segs_.size() > n ? segs_[n] : other.segs_[n];
        throw std::invalid_argument(context + ": layout mismatch, segment '" + extra.name +
                                    "' present on one side only");
    }
}

ParamVector ParamVector::clone() const {
    ParamVector pv;
    for (const auto& s : segs_) pv.add(s.name, s.tensor.detach());
    return pv;
}

std::vector<ad::Real> ParamVector::flatten() const {
    std::vector<ad::Real> out;
    out.reserve(total_);
    for (const auto& s : segs_) out.insert(out.end(), s.tensor.data().begin(), s.tensor.data().end());
    return out;
}

void ParamVector::assign_flat(std::span<const ad::Real> values) {
    if (values.size() != total_) {
        throw std::invalid_argument("param vector: assign " + std::to_string(values.size()) + " values to " +
                                    std::to_string(total_) + " slots");
    }
    std::size_t off = 0;
    for (auto& s : segs_) {
        auto d = s.tensor.data();
        std::copy(values.begin() + static_cast<std::ptrdiff_t>(off),
                  values.begin() + static_cast<std::ptrdiff_t>(off + d.size()), d.begin());
        off += d.size();
    }
}

std::vector<ad::Tensor> ParamVector::tensors() const {
    std::vector<ad::Tensor> t;
    t.reserve(segs_.size());
    for (const auto& s : segs_) t.push_back(s.tensor);
    return t;
}

void ParamVector::set_requires_grad(bool on) {
    for (auto& s : segs_) s.tensor.set_requires_grad(on);
}

void ParamVector::zero_grad() {
    for (auto& s : segs_) s.tensor.zero_grad();
}

Gradients ParamVector::gradients() const {
    Gradients g;
    g.reserve(segs_.size());
    for (const auto& s : segs_) {
        if (s.tensor.has_grad())
            g.emplace_back(s.tensor.grad().begin(), s.tensor.grad().end());
        else
            g.emplace_back(s.tensor.size(), 0.0);
    }
    return g;
}

bool ParamVector::operator==(const ParamVector& other) const {
    if (!same_layout(other)) return false;
    for (std::size_t i = 0; i < segs_.size(); ++i) {
        auto a = segs_[i].tensor.data();
        auto b = other.segs_[i].tensor.data();
        if (!std::equal(a.begin(), a.end(), b.begin())) return false;
    }
    return true;
}

std::vector<std::uint8_t> ParamVector::serialize() const {
    bytes::Writer w;
    w.u32(static_cast<std::uint32_t>(segs_.size()));
    for (const auto& s : segs_) {
        w.str(s.name);
        w.u32(static_cast<std::uint32_t>(s.tensor.shape().size()));
        for (auto d : s.tensor.shape()) w.u64(d);
        for (auto v : s.tensor.data()) w.f64(v);
    }
    return w.take();
}

ParamVector ParamVector::deserialize(std::span<const std::uint8_t> in) {
    bytes::Reader r(in);
    ParamVector pv;
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = r.str();
        const std::uint32_t rank = r.u32();
        ad::Shape shape(rank);
        for (auto& d : shape) d = r.u64();
        std::vector<ad::Real> values(ad::numel(shape));
        for (auto& v : values) v = r.f64();
        pv.add(std::move(name), ad::Tensor::from(std::move(shape), std::move(values)));
    }
    if (r.remaining() != 0) throw DataError("param vector: trailing bytes after last segment");
    return pv;
}

} // namespace uarnvc
