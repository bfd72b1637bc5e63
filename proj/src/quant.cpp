// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "portir/error.hpp"

namespace portir {

std::string_view quant_scheme_name(QuantScheme scheme) {
  switch (scheme) {
    case QuantScheme::SymmetricInt8: return "symmetric-int8";
    case QuantScheme::AffineUint8: return "affine-uint8";
    case QuantScheme::AffineInt16: return "affine-int16";
  }
  return "?";
}

QuantScheme parse_quant_scheme(std::string_view text) {
  for (auto s : {QuantScheme::SymmetricInt8, QuantScheme::AffineUint8, QuantScheme::AffineInt16}) {
    if (quant_scheme_name(s) == text) return s;
  }
  fail(ErrorCode::ParseError, "unknown quantization scheme '" + std::string(text) + "'");
}

std::int64_t quant_min(QuantScheme scheme) {
  switch (scheme) {
    case QuantScheme::SymmetricInt8: return -128;
    case QuantScheme::AffineUint8: return 0;
    case QuantScheme::AffineInt16: return -32768;
  }
  return 0;
}

std::int64_t quant_max(QuantScheme scheme) {
  switch (scheme) {
    case QuantScheme::SymmetricInt8: return 127;
    case QuantScheme::AffineUint8: return 255;
    case QuantScheme::AffineInt16: return 32767;
  }
  return 0;
}

std::int64_t quantize(double x, const QuantParams& p) {
  const auto lo = quant_min(p.scheme);
  const auto hi = quant_max(p.scheme);
  if (std::isnan(x)) return std::clamp(p.zero_point, lo, hi);
  const double q = std::round(x / p.scale) + static_cast<double>(p.zero_point);
  if (q <= static_cast<double>(lo)) return lo;
  if (q >= static_cast<double>(hi)) return hi;
  return static_cast<std::int64_t>(q);
}

double dequantize(std::int64_t q, const QuantParams& p) {
  return static_cast<double>(q - p.zero_point) * p.scale;
}

float fake_quant(float x, const QuantParams& p) { return static_cast<float>(dequantize(quantize(x, p), p)); }

}  // namespace portir
