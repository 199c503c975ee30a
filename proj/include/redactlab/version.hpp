// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

namespace redactlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace redactlab
