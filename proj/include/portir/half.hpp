// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace portir {

/// IEEE 754 binary32 -> binary16, round to nearest, ties to even.
/// Overflow saturates to infinity; NaN stays NaN (quiet).
std::uint16_t f32_to_f16_bits(float value);

/// Exact widening of a binary16 bit pattern.
float f16_bits_to_f32(std::uint16_t bits);

}  // namespace portir
