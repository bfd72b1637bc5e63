// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "portir/graph.hpp"

namespace portir {

/// Bundled toy models, shipped as models/<name>/model.pir.json.
///   toy_conv          residual conv block (super-resolution style)
///   toy_dynamic       toy_conv with a symbolic batch dim "N"
///   toy_yolo          detection head with float Mod on anchor indices
///   toy_yolo_int      same head with integer Mod
///   toy_lpr           conv features pooled by MaxPool3d
///   toy_einsum        attention scores via Einsum
///   toy_unrepairable  padded MaxPool3d
std::vector<std::string> zoo_names();
Graph zoo_graph(std::string_view name);

}  // namespace portir
