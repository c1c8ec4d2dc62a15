// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace uarnvc {

// One RGB frame, planar (R plane, G plane, B plane), values in [0,1].
struct Frame {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> planes;

    Frame() = default;
    Frame(std::size_t w, std::size_t h) : width(w), height(h), planes(3 * w * h, 0.0) {}

    std::size_t plane_size() const noexcept { return width * height; }
    double& at(std::size_t c, std::size_t y, std::size_t x) { return planes[(c * height + y) * width + x]; }
    double at(std::size_t c, std::size_t y, std::size_t x) const { return planes[(c * height + y) * width + x]; }

    bool operator==(const Frame&) const = default;
};

} // namespace uarnvc
