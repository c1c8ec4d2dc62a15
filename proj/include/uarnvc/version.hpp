// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace uarnvc {

inline constexpr const char* kToolVersion = "0.1.0";

} // namespace uarnvc
