// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian byte packing shared by the serializers.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "uarnvc/error.hpp"

namespace uarnvc::bytes {

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }
    void raw(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    std::vector<std::uint8_t>& buffer() { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader. Offsets in error messages are relative to
// `base_offset` so callers can report absolute file positions.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b, std::size_t base_offset = 0) : b_(b), base_(base_offset) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::span<const std::uint8_t> raw(std::size_t n) {
        need(n);
        auto s = b_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return b_.size() - pos_; }
    std::size_t offset() const noexcept { return base_ + pos_; }

private:
    void need(std::size_t n) const {
        if (b_.size() - pos_ < n) {
            throw DataError("truncated input at offset " + std::to_string(base_ + pos_) + ": need " +
                            std::to_string(n) + " bytes, have " + std::to_string(b_.size() - pos_));
        }
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> b_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

} // namespace uarnvc::bytes
