// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace portir {

enum class DType : std::uint8_t { F32, F16, I64, I8, U8, I16 };

inline constexpr DType kAllDTypes[] = {DType::F32, DType::F16, DType::I64,
                                       DType::I8,  DType::U8,  DType::I16};

std::string_view dtype_name(DType dtype);
/// Parses the lowercase file spelling ("f32", "i64", ...). Throws ParseError.
DType parse_dtype(std::string_view text);

std::size_t dtype_size(DType dtype);

constexpr bool is_float(DType dtype) {
  return dtype == DType::F32 || dtype == DType::F16;
}
constexpr bool is_integer(DType dtype) { return !is_float(dtype); }

/// Representable range of an integer dtype.
std::int64_t dtype_min(DType dtype);
std::int64_t dtype_max(DType dtype);

/// "float" / "int", the coarse class used in failure signatures.
std::string_view dtype_class(DType dtype);

}  // namespace portir
