// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "portir/dtype.hpp"

namespace portir {

using StaticShape = std::vector<std::int64_t>;

std::int64_t element_count(const StaticShape& shape);
std::string shape_to_string(const StaticShape& shape);

/// Dense row-major tensor with a fully static shape.
///
/// Float dtypes are held as binary32 (F16 values are kept widened and are
/// exactly representable in binary16); integer dtypes are held as int64.
class TensorValue {
 public:
  TensorValue() = default;
  /// Zero-filled tensor.
  TensorValue(DType dtype, StaticShape shape);

  static TensorValue from_floats(DType dtype, StaticShape shape, std::vector<float> data);
  static TensorValue from_ints(DType dtype, StaticShape shape, std::vector<std::int64_t> data);
  static TensorValue scalar_f32(float value) { return from_floats(DType::F32, {}, {value}); }

  DType dtype() const { return dtype_; }
  const StaticShape& shape() const { return shape_; }
  std::int64_t numel() const;

  std::span<const float> floats() const;
  std::span<float> floats();
  std::span<const std::int64_t> ints() const;
  std::span<std::int64_t> ints();

  double at(std::int64_t index) const;

  /// Little-endian element stream, the blob file format.
  std::vector<std::uint8_t> to_bytes() const;
  static TensorValue from_bytes(DType dtype, StaticShape shape, std::span<const std::uint8_t> bytes);

  /// Bitwise equality (NaN payloads compare equal when their bits do).
  friend bool operator==(const TensorValue& a, const TensorValue& b);

 private:
  DType dtype_ = DType::F32;
  StaticShape shape_;
  std::vector<float> f_;
  std::vector<std::int64_t> i_;
};

using NamedTensor = std::pair<std::string, TensorValue>;
/// Ordered name -> tensor list; order carries graph input/output order.
using TensorList = std::vector<NamedTensor>;

const TensorValue* find_tensor(const TensorList& list, const std::string& name);

}  // namespace portir
