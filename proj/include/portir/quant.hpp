// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace portir {

enum class QuantScheme { SymmetricInt8, AffineUint8, AffineInt16 };

std::string_view quant_scheme_name(QuantScheme scheme);
QuantScheme parse_quant_scheme(std::string_view text);

/// Per-tensor quantization parameters. scale > 0; zero_point is 0 for the
/// symmetric scheme and inside the integer range otherwise.
struct QuantParams {
  QuantScheme scheme = QuantScheme::AffineUint8;
  double scale = 1.0;
  std::int64_t zero_point = 0;

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

using QuantParamMap = std::map<std::string, QuantParams>;

std::int64_t quant_min(QuantScheme scheme);
std::int64_t quant_max(QuantScheme scheme);

/// round-half-away-from-zero(x / scale) + zero_point, clamped to the range.
std::int64_t quantize(double x, const QuantParams& p);
double dequantize(std::int64_t q, const QuantParams& p);
/// dequantize(quantize(x)) stored back as binary32.
float fake_quant(float x, const QuantParams& p);

}  // namespace portir
