// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/tensor.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "portir/error.hpp"
#include "portir/half.hpp"

static_assert(std::endian::native == std::endian::little, "blob I/O assumes a little-endian host");

namespace portir {

std::int64_t element_count(const StaticShape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const StaticShape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

TensorValue::TensorValue(DType dtype, StaticShape shape) : dtype_(dtype), shape_(std::move(shape)) {
  const auto n = static_cast<std::size_t>(element_count(shape_));
  if (is_float(dtype_)) {
    f_.assign(n, 0.0f);
  } else {
    i_.assign(n, 0);
  }
}

TensorValue TensorValue::from_floats(DType dtype, StaticShape shape, std::vector<float> data) {
  if (!is_float(dtype)) fail(ErrorCode::TypeMismatch, "from_floats with integer dtype");
  if (static_cast<std::int64_t>(data.size()) != element_count(shape)) {
    fail(ErrorCode::ShapeMismatch, "float payload size does not match shape " + shape_to_string(shape));
  }
  TensorValue t;
  t.dtype_ = dtype;
  t.shape_ = std::move(shape);
  t.f_ = std::move(data);
  return t;
}

TensorValue TensorValue::from_ints(DType dtype, StaticShape shape, std::vector<std::int64_t> data) {
  if (is_float(dtype)) fail(ErrorCode::TypeMismatch, "from_ints with float dtype");
  if (static_cast<std::int64_t>(data.size()) != element_count(shape)) {
    fail(ErrorCode::ShapeMismatch, "integer payload size does not match shape " + shape_to_string(shape));
  }
  TensorValue t;
  t.dtype_ = dtype;
  t.shape_ = std::move(shape);
  t.i_ = std::move(data);
  return t;
}

std::int64_t TensorValue::numel() const { return element_count(shape_); }

std::span<const float> TensorValue::floats() const {
  if (!is_float(dtype_)) fail(ErrorCode::TypeMismatch, "floats() on integer tensor");
  return f_;
}
std::span<float> TensorValue::floats() {
  if (!is_float(dtype_)) fail(ErrorCode::TypeMismatch, "floats() on integer tensor");
  return f_;
}
std::span<const std::int64_t> TensorValue::ints() const {
  if (is_float(dtype_)) fail(ErrorCode::TypeMismatch, "ints() on float tensor");
  return i_;
}
std::span<std::int64_t> TensorValue::ints() {
  if (is_float(dtype_)) fail(ErrorCode::TypeMismatch, "ints() on float tensor");
  return i_;
}

double TensorValue::at(std::int64_t index) const {
  const auto i = static_cast<std::size_t>(index);
  return is_float(dtype_) ? static_cast<double>(f_[i]) : static_cast<double>(i_[i]);
}

namespace {

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T read_le(const std::uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

}  // namespace

std::vector<std::uint8_t> TensorValue::to_bytes() const {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(numel()) * dtype_size(dtype_));
  switch (dtype_) {
    case DType::F32:
      for (float v : f_) append_le(out, v);
      break;
    case DType::F16:
      for (float v : f_) append_le(out, f32_to_f16_bits(v));
      break;
    case DType::I64:
      for (auto v : i_) append_le(out, v);
      break;
    case DType::I8:
      for (auto v : i_) append_le(out, static_cast<std::int8_t>(v));
      break;
    case DType::U8:
      for (auto v : i_) append_le(out, static_cast<std::uint8_t>(v));
      break;
    case DType::I16:
      for (auto v : i_) append_le(out, static_cast<std::int16_t>(v));
      break;
  }
  return out;
}

TensorValue TensorValue::from_bytes(DType dtype, StaticShape shape, std::span<const std::uint8_t> bytes) {
  const auto n = static_cast<std::size_t>(element_count(shape));
  const std::size_t width = dtype_size(dtype);
  if (bytes.size() != n * width) {
    std::ostringstream os;
    os << "blob holds " << bytes.size() << " bytes, expected " << n * width << " for "
       << dtype_name(dtype) << shape_to_string(shape);
    fail(ErrorCode::ParseError, os.str());
  }
  TensorValue t(dtype, std::move(shape));
  const std::uint8_t* p = bytes.data();
  for (std::size_t i = 0; i < n; ++i, p += width) {
    switch (dtype) {
      case DType::F32: t.f_[i] = read_le<float>(p); break;
      case DType::F16: t.f_[i] = f16_bits_to_f32(read_le<std::uint16_t>(p)); break;
      case DType::I64: t.i_[i] = read_le<std::int64_t>(p); break;
      case DType::I8: t.i_[i] = read_le<std::int8_t>(p); break;
      case DType::U8: t.i_[i] = read_le<std::uint8_t>(p); break;
      case DType::I16: t.i_[i] = read_le<std::int16_t>(p); break;
    }
  }
  return t;
}

bool operator==(const TensorValue& a, const TensorValue& b) {
  if (a.dtype_ != b.dtype_ || a.shape_ != b.shape_) return false;
  if (a.i_ != b.i_) return false;
  if (a.f_.size() != b.f_.size()) return false;
  return a.f_.empty() || std::memcmp(a.f_.data(), b.f_.data(), a.f_.size() * sizeof(float)) == 0;
}

const TensorValue* find_tensor(const TensorList& list, const std::string& name) {
  for (const auto& [n, t] : list) {
    if (n == name) return &t;
  }
  return nullptr;
}

}  // namespace portir
