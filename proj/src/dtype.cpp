// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/dtype.hpp"

#include <limits>
#include <string>

#include "portir/error.hpp"

namespace portir {

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::F32: return "f32";
    case DType::F16: return "f16";
    case DType::I64: return "i64";
    case DType::I8: return "i8";
    case DType::U8: return "u8";
    case DType::I16: return "i16";
  }
  return "?";
}

DType parse_dtype(std::string_view text) {
  for (DType d : kAllDTypes) {
    if (dtype_name(d) == text) return d;
  }
  fail(ErrorCode::ParseError, "unknown dtype '" + std::string(text) + "'");
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::F32: return 4;
    case DType::F16: return 2;
    case DType::I64: return 8;
    case DType::I8: return 1;
    case DType::U8: return 1;
    case DType::I16: return 2;
  }
  return 0;
}

std::int64_t dtype_min(DType dtype) {
  switch (dtype) {
    case DType::I8: return -128;
    case DType::U8: return 0;
    case DType::I16: return -32768;
    default: return std::numeric_limits<std::int64_t>::min();
  }
}

std::int64_t dtype_max(DType dtype) {
  switch (dtype) {
    case DType::I8: return 127;
    case DType::U8: return 255;
    case DType::I16: return 32767;
    default: return std::numeric_limits<std::int64_t>::max();
  }
}

std::string_view dtype_class(DType dtype) { return is_float(dtype) ? "float" : "int"; }

}  // namespace portir
