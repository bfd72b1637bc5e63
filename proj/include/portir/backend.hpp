// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "portir/capability.hpp"
#include "portir/graph.hpp"
#include "portir/interpreter.hpp"
#include "portir/quant.hpp"

namespace portir {

/// Nearest binary16 value (ties to even), widened back to binary32.
float round_f16(float x);

/// Stand-in for an ahead-of-time compiled context binary.
struct CompiledArtifact {
  std::string profile;
  PrecisionMode mode = PrecisionMode::FP16;
  std::string graph_sha256;
  std::string created_at;
  std::optional<QuantParamMap> quant_params;
  Graph graph;

  /// Content hash over everything except created_at.
  std::string artifact_sha256() const;
};

/// Throws UnsupportedMode, IncompatibleGraph (listing the diagnostics),
/// StaticShapeRequired, or MissingParams for quantized modes without params.
CompiledArtifact compile(const Graph& graph, const CapabilityProfile& profile, PrecisionMode mode,
                         const QuantParamMap& params = {});

nlohmann::json artifact_to_json(const CompiledArtifact& artifact, bool with_created_at = true);
nlohmann::json quant_params_to_json(const QuantParamMap& params);
QuantParamMap quant_params_from_json(const nlohmann::json& doc);

/// Writes `<dir>/<stem>.ctxbin.json` plus a graph snapshot `<stem>.pir.json`.
std::filesystem::path write_artifact(const CompiledArtifact& artifact, const std::filesystem::path& dir,
                                     const std::string& stem);
/// Throws ParseError if the snapshot does not hash to graph_sha256.
CompiledArtifact read_artifact(const std::filesystem::path& file);

using CalibrationSet = std::vector<TensorList>;

QuantScheme activation_scheme(PrecisionMode mode);

/// Affine params for an observed [lo, hi], widened to include 0.
QuantParams affine_params(double lo, double hi, QuantScheme scheme);
/// Symmetric int8 params for max |w|.
QuantParams symmetric_params(double max_abs);

/// Min/max observation over all samples on the reference interpreter.
/// Constant float tensors get symmetric-int8 params, every other float
/// tensor gets affine params for the mode. Throws EmptyCalibrationSet,
/// UnsupportedMode (FP16) or FeedMismatch.
QuantParamMap calibrate(const Graph& graph, const CalibrationSet& cal, PrecisionMode mode);

RunResult run_fp16(const CompiledArtifact& artifact, const TensorList& feeds);
RunResult run_quant(const CompiledArtifact& artifact, const QuantParamMap& params, const TensorList& feeds);
/// Dispatches on artifact.mode using the artifact's own params.
RunResult run_artifact(const CompiledArtifact& artifact, const TensorList& feeds);

}  // namespace portir
