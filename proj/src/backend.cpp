// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "portir/error.hpp"
#include "portir/half.hpp"
#include "portir/io.hpp"
#include "portir/serialize.hpp"
#include "portir/shape_inference.hpp"

namespace portir {

using nlohmann::json;

namespace {

constexpr double kScaleFloor = 1e-12;

}  // namespace

float round_f16(float x) { return f16_bits_to_f32(f32_to_f16_bits(x)); }

json quant_params_to_json(const QuantParamMap& params) {
  json doc = json::object();
  for (const auto& [name, p] : params) {
    doc[name] = {{"scheme", std::string(quant_scheme_name(p.scheme))}, {"scale", p.scale}, {"zero_point", p.zero_point}};
  }
  return doc;
}

QuantParamMap quant_params_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::ParseError, "quant_params: expected an object");
  QuantParamMap params;
  for (const auto& [name, p] : doc.items()) {
    try {
      QuantParams q;
      q.scheme = parse_quant_scheme(p.at("scheme").get<std::string>());
      q.scale = p.at("scale").get<double>();
      q.zero_point = p.at("zero_point").get<std::int64_t>();
      if (!(q.scale > 0.0)) fail(ErrorCode::ParseError, "quant_params." + name + ": scale must be positive");
      params.emplace(name, q);
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, "quant_params." + name + ": " + e.what());
    }
  }
  return params;
}

json artifact_to_json(const CompiledArtifact& a, bool with_created_at) {
  json doc{{"profile", a.profile}, {"mode", std::string(mode_name(a.mode))}, {"graph_sha256", a.graph_sha256}};
  if (with_created_at) doc["created_at"] = a.created_at;
  if (a.quant_params) doc["quant_params"] = quant_params_to_json(*a.quant_params);
  return doc;
}

std::string CompiledArtifact::artifact_sha256() const { return sha256_hex(artifact_to_json(*this, false).dump()); }

CompiledArtifact compile(const Graph& graph, const CapabilityProfile& profile, PrecisionMode mode,
                         const QuantParamMap& params) {
  if (!profile.supports(mode)) {
    fail(ErrorCode::UnsupportedMode, "profile '" + profile.name + "' does not offer mode " + std::string(mode_name(mode)));
  }
  require_valid(graph);
  const Graph g = infer_shapes(graph);
  const auto diags = check_compatibility(g, profile);
  if (!diags.empty()) {
    std::string list;
    for (const auto& d : diags) list += "\n  " + d.to_string();
    fail(ErrorCode::IncompatibleGraph, std::to_string(diags.size()) + " diagnostic(s) against profile '" + profile.name +
                                           "':" + list);
  }
  if (!g.is_static()) fail(ErrorCode::StaticShapeRequired, "graph '" + g.name + "' has symbolic dimensions");
  CompiledArtifact a;
  a.profile = profile.name;
  a.mode = mode;
  a.graph = g;
  a.graph_sha256 = graph_sha256(g);
  a.created_at = utc_timestamp();
  if (is_quant_mode(mode)) {
    for (const auto& [name, spec] : g.value_specs) {
      if (is_float(spec.dtype) && !params.contains(name)) {
        fail(ErrorCode::MissingParams, "no quantization params for tensor '" + name + "'");
      }
    }
    QuantParamMap used;
    for (const auto& [name, spec] : g.value_specs) {
      if (is_float(spec.dtype)) used.emplace(name, params.at(name));
    }
    a.quant_params = std::move(used);
  }
  return a;
}

std::filesystem::path write_artifact(const CompiledArtifact& a, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto graph_file = stem + ".pir.json";
  save_graph(a.graph, dir / graph_file);
  json doc = artifact_to_json(a);
  doc["graph_file"] = graph_file;
  const auto path = dir / (stem + ".ctxbin.json");
  write_file_atomic(path, doc.dump(2) + "\n");
  return path;
}

CompiledArtifact read_artifact(const std::filesystem::path& file) {
  json doc;
  try {
    doc = json::parse(read_text(file));
    CompiledArtifact a;
    a.profile = doc.at("profile").get<std::string>();
    a.mode = parse_mode(doc.at("mode").get<std::string>());
    a.graph_sha256 = doc.at("graph_sha256").get<std::string>();
    a.created_at = doc.value("created_at", "");
    if (doc.contains("quant_params")) a.quant_params = quant_params_from_json(doc["quant_params"]);
    a.graph = infer_shapes(load_graph(file.parent_path() / doc.at("graph_file").get<std::string>()));
    if (graph_sha256(a.graph) != a.graph_sha256) {
      fail(ErrorCode::ParseError, "artifact '" + file.string() + "': graph snapshot does not match graph_sha256");
    }
    return a;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, "artifact '" + file.string() + "': " + e.what());
  }
}

QuantScheme activation_scheme(PrecisionMode mode) {
  switch (mode) {
    case PrecisionMode::W8A8: return QuantScheme::AffineUint8;
    case PrecisionMode::W8A16: return QuantScheme::AffineInt16;
    case PrecisionMode::FP16: break;
  }
  fail(ErrorCode::UnsupportedMode, "FP16 has no activation quantization scheme");
}

QuantParams affine_params(double lo, double hi, QuantScheme scheme) {
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  const auto qmin = quant_min(scheme);
  const auto qmax = quant_max(scheme);
  QuantParams p;
  p.scheme = scheme;
  p.scale = std::max((hi - lo) / static_cast<double>(qmax - qmin), kScaleFloor);
  const double zp = std::round(static_cast<double>(qmin) - lo / p.scale);
  p.zero_point = static_cast<std::int64_t>(std::clamp(zp, static_cast<double>(qmin), static_cast<double>(qmax)));
  return p;
}

QuantParams symmetric_params(double max_abs) {
  QuantParams p;
  p.scheme = QuantScheme::SymmetricInt8;
  p.scale = std::max(max_abs / 127.0, kScaleFloor);
  p.zero_point = 0;
  return p;
}

QuantParamMap calibrate(const Graph& graph, const CalibrationSet& cal, PrecisionMode mode) {
  if (cal.empty()) fail(ErrorCode::EmptyCalibrationSet, "calibration set is empty");
  const QuantScheme act = activation_scheme(mode);
  struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
  };
  std::map<std::string, Range> ranges;
  SessionOptions options;
  options.observers.emplace(std::string(kObserveAll), [&](const std::string& name, const TensorValue& v) {
    if (!is_float(v.dtype())) return;
    auto& r = ranges[name];
    for (float x : v.floats()) {
      if (!std::isfinite(x)) continue;
      r.lo = std::min(r.lo, static_cast<double>(x));
      r.hi = std::max(r.hi, static_cast<double>(x));
    }
  });
  const Session session(graph, std::move(options));
  for (const auto& feeds : cal) session.run(feeds);

  const Graph& g = session.graph();
  QuantParamMap params;
  for (const auto& [name, spec] : g.value_specs) {
    if (!is_float(spec.dtype)) continue;
    Range r = ranges[name];
    if (r.lo > r.hi) r = Range{0.0, 0.0};
    const Node* p = g.producer(name);
    if (p && p->op == OpKind::Constant) {
      params.emplace(name, symmetric_params(std::max(std::fabs(r.lo), std::fabs(r.hi))));
    } else {
      params.emplace(name, affine_params(r.lo, r.hi, act));
    }
  }
  return params;
}

RunResult run_fp16(const CompiledArtifact& artifact, const TensorList& feeds) {
  SessionOptions options;
  options.backend = BackendKind::TargetFp16;
  return Session(artifact.graph, std::move(options)).run(feeds);
}

RunResult run_quant(const CompiledArtifact& artifact, const QuantParamMap& params, const TensorList& feeds) {
  SessionOptions options;
  options.backend = BackendKind::TargetQuant;
  options.quant_params = params;
  return Session(artifact.graph, std::move(options)).run(feeds);
}

RunResult run_artifact(const CompiledArtifact& artifact, const TensorList& feeds) {
  if (artifact.mode == PrecisionMode::FP16) return run_fp16(artifact, feeds);
  if (!artifact.quant_params) fail(ErrorCode::MissingParams, "quantized artifact carries no params");
  return run_quant(artifact, *artifact.quant_params, feeds);
}

}  // namespace portir
