// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "portir/backend.hpp"
#include "portir/error.hpp"
#include "portir/io.hpp"
#include "portir/pipeline.hpp"
#include "portir/shape_inference.hpp"
#include "portir/zoo.hpp"

namespace portir {
namespace {

using nlohmann::json;
using testing::TempDir;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::IoError;
}

CalibrationSet cal_set(const Graph& g, std::uint64_t seed, std::uint64_t first, int n) {
  CalibrationSet cal;
  for (int i = 0; i < n; ++i) cal.push_back(generate_feeds(g, seed, first + static_cast<std::uint64_t>(i)));
  return cal;
}

// Bundled graphs that compile on qnn-like once repaired.
Graph deployable(const std::string& name) {
  RepairOptions opts;
  for (const auto& sym : graph_symbols(zoo_graph(name))) opts.context.bindings[sym] = 2;
  Graph g = repair_graph(zoo_graph(name), builtin_profile("qnn-like"), KnowledgeBase{}, opts).graph;
  if (!g.is_static()) g = bind_shapes(g, opts.context.bindings);
  return infer_shapes(g);
}

TEST(Compile, ErrorPrecedence) {
  const auto& snpe = builtin_profile("snpe-like");
  const auto& qnn = builtin_profile("qnn-like");
  EXPECT_EQ(code_of([&] { compile(zoo_graph("toy_lpr"), snpe, PrecisionMode::W8A16); }), ErrorCode::UnsupportedMode);
  EXPECT_EQ(code_of([&] { compile(zoo_graph("toy_lpr"), qnn, PrecisionMode::FP16); }), ErrorCode::IncompatibleGraph);
  CapabilityProfile relaxed = qnn;
  relaxed.requires_static_shapes = false;
  EXPECT_EQ(code_of([&] { compile(zoo_graph("toy_dynamic"), relaxed, PrecisionMode::FP16); }),
            ErrorCode::StaticShapeRequired);
  EXPECT_EQ(code_of([&] { compile(zoo_graph("toy_conv"), qnn, PrecisionMode::W8A8); }), ErrorCode::MissingParams);
  try {
    compile(zoo_graph("toy_yolo"), qnn, PrecisionMode::FP16);
  } catch (const Error& e) {
    EXPECT_NE(e.detail().find("Mod"), std::string::npos);
  }
}

TEST(Compile, SucceedsIffNoDiagnostics) {
  for (const auto& name : zoo_names()) {
    for (const auto& pname : builtin_profile_names()) {
      const auto& p = builtin_profile(pname);
      const bool clean = check_compatibility(zoo_graph(name), p).empty();
      bool compiled = true;
      try {
        compile(zoo_graph(name), p, PrecisionMode::FP16);
      } catch (const Error&) {
        compiled = false;
      }
      EXPECT_EQ(clean, compiled) << name << " on " << pname;
    }
  }
}

TEST(Artifact, RoundTripAndStableHash) {
  TempDir dir;
  const Graph g = zoo_graph("toy_conv");
  const auto params = calibrate(g, cal_set(g, 42, 0, 4), PrecisionMode::W8A8);
  const auto a = compile(g, builtin_profile("qnn-like"), PrecisionMode::W8A8, params);
  const auto file = write_artifact(a, dir.path(), "toy_conv.W8A8");
  EXPECT_EQ(file.filename(), "toy_conv.W8A8.ctxbin.json");
  const auto b = read_artifact(file);
  EXPECT_EQ(b.artifact_sha256(), a.artifact_sha256());
  EXPECT_EQ(b.graph_sha256, a.graph_sha256);
  EXPECT_EQ(b.quant_params, a.quant_params);
  EXPECT_TRUE(b.graph == a.graph);
  auto later = compile(g, builtin_profile("qnn-like"), PrecisionMode::W8A8, params);
  later.created_at = "2000-01-01T00:00:00.000Z";
  EXPECT_EQ(later.artifact_sha256(), a.artifact_sha256());
  const auto feeds = generate_feeds(g, 1, 0);
  EXPECT_TRUE(run_artifact(a, feeds).outputs[0].second == run_artifact(b, feeds).outputs[0].second);
}

TEST(Artifact, TamperedSnapshotIsRejected) {
  TempDir dir;
  const auto a = compile(zoo_graph("toy_conv"), builtin_profile("qnn-like"), PrecisionMode::FP16);
  const auto file = write_artifact(a, dir.path(), "m");
  const auto blob = dir / "m.constants" / "conv2_w.bin";
  auto bytes = read_bytes(blob);
  bytes[0] ^= 1;
  write_bytes(blob, bytes);
  EXPECT_EQ(code_of([&] { read_artifact(file); }), ErrorCode::ParseError);
  write_text(dir / "bad.ctxbin.json", "{\"profile\": 1}");
  EXPECT_EQ(code_of([&] { read_artifact(dir / "bad.ctxbin.json"); }), ErrorCode::ParseError);
}

TEST(Calibration, Errors) {
  const Graph g = zoo_graph("toy_conv");
  EXPECT_EQ(code_of([&] { calibrate(g, {}, PrecisionMode::W8A8); }), ErrorCode::EmptyCalibrationSet);
  EXPECT_EQ(code_of([&] { calibrate(g, cal_set(g, 1, 0, 1), PrecisionMode::FP16); }), ErrorCode::UnsupportedMode);
  CalibrationSet bad{{{"nope", TensorValue::scalar_f32(1.0f)}}};
  EXPECT_EQ(code_of([&] { calibrate(g, bad, PrecisionMode::W8A8); }), ErrorCode::FeedMismatch);
}

TEST(Calibration, ParamInvariants) {
  for (const auto& name : {"toy_conv", "toy_lpr", "toy_einsum", "toy_yolo"}) {
    const Graph g = deployable(name);
    for (auto mode : {PrecisionMode::W8A8, PrecisionMode::W8A16}) {
      const auto params = calibrate(g, cal_set(g, 42, 4, 8), mode);
      for (const auto& [t, spec] : g.value_specs) {
        if (!is_float(spec.dtype)) continue;
        ASSERT_TRUE(params.count(t)) << t;
        const auto& p = params.at(t);
        EXPECT_GT(p.scale, 0.0);
        EXPECT_GE(p.zero_point, quant_min(p.scheme));
        EXPECT_LE(p.zero_point, quant_max(p.scheme));
        if (p.scheme == QuantScheme::SymmetricInt8) {
          EXPECT_EQ(p.zero_point, 0);
        }
        const Node* prod = g.producer(t);
        if (prod && prod->op == OpKind::Constant) {
          EXPECT_EQ(p.scheme, QuantScheme::SymmetricInt8) << t;
        } else {
          EXPECT_EQ(p.scheme, activation_scheme(mode)) << t;
        }
      }
      EXPECT_EQ(quant_params_from_json(quant_params_to_json(params)), params);
    }
  }
}

TEST(Quant, SchemeFormulas) {
  const QuantParams p{QuantScheme::AffineUint8, 0.1, 10};
  EXPECT_EQ(quantize(0.0, p), 10);
  EXPECT_EQ(quantize(0.05, p), 11);
  EXPECT_EQ(quantize(-0.05, p), 9);
  EXPECT_EQ(quantize(1e9, p), 255);
  EXPECT_EQ(quantize(-1e9, p), 0);
  EXPECT_DOUBLE_EQ(dequantize(20, p), 1.0);
  const auto a = affine_params(-1.0, 3.0, QuantScheme::AffineUint8);
  EXPECT_NEAR(a.scale, 4.0 / 255.0, 1e-15);
  EXPECT_EQ(a.zero_point, 64);
  const auto pos = affine_params(2.0, 5.0, QuantScheme::AffineUint8);
  EXPECT_EQ(pos.zero_point, 0);
  EXPECT_NEAR(pos.scale, 5.0 / 255.0, 1e-15);
  EXPECT_NEAR(symmetric_params(2.54).scale, 0.02, 1e-15);
}

// For every calibrated tensor of the bundled graphs: values inside the
// representable range round-trip within scale/2, values outside it land on
// the clamped boundary.
TEST(Quant, ErrorBoundOnCalibratedTensors) {
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  std::int64_t clamped = 0;
  for (const auto& name : {"toy_conv", "toy_lpr", "toy_einsum", "toy_yolo", "toy_dynamic"}) {
    const Graph g = deployable(name);
    for (auto mode : {PrecisionMode::W8A8, PrecisionMode::W8A16}) {
      const auto params = calibrate(g, cal_set(g, 42, 4, 16), mode);
      SessionOptions opts;
      opts.observers.emplace(std::string(kObserveAll), [&](const std::string& t, const TensorValue& v) {
        if (!is_float(v.dtype())) return;
        const auto& p = params.at(t);
        const double lo = dequantize(quant_min(p.scheme), p);
        const double hi = dequantize(quant_max(p.scheme), p);
        for (float x : v.floats()) {
          const double q = fake_quant(x, p);
          if (x >= lo && x <= hi) {
            const double slack = std::fabs(static_cast<double>(x)) * std::numeric_limits<float>::epsilon();
            if (std::fabs(q - static_cast<double>(x)) > p.scale / 2 + slack) ++violations;
            ++checked;
          } else {
            const double edge = x > hi ? hi : lo;
            EXPECT_EQ(static_cast<float>(edge), static_cast<float>(q)) << t;
            ++clamped;
          }
        }
      });
      const Session s(g, std::move(opts));
      for (std::uint64_t i = 0; i < 4; ++i) s.run(generate_feeds(g, 42, 100 + i));
    }
  }
  EXPECT_GE(checked, 10000);
  EXPECT_EQ(violations, 0);
  RecordProperty("clamped", static_cast<int>(clamped));
}

struct ModeErrors {
  double fp16 = 0.0;
  double w8a16 = 0.0;
  double w8a8 = 0.0;
};

ModeErrors mode_errors(const Graph& g) {
  const auto& qnn = builtin_profile("qnn-like");
  const auto cal = cal_set(g, 42, 4, 16);
  const auto fp16 = compile(g, qnn, PrecisionMode::FP16);
  const auto w16 = compile(g, qnn, PrecisionMode::W8A16, calibrate(g, cal, PrecisionMode::W8A16));
  const auto w8 = compile(g, qnn, PrecisionMode::W8A8, calibrate(g, cal, PrecisionMode::W8A8));
  const Session ref(g);
  ModeErrors e;
  const Tolerance tol;
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto feeds = generate_feeds(g, 42, i);
    const auto base = ref.run(feeds).outputs;
    e.fp16 = std::max(e.fp16, compare(run_artifact(fp16, feeds).outputs, base, tol).max_abs());
    e.w8a16 = std::max(e.w8a16, compare(run_artifact(w16, feeds).outputs, base, tol).max_abs());
    e.w8a8 = std::max(e.w8a8, compare(run_artifact(w8, feeds).outputs, base, tol).max_abs());
  }
  return e;
}

// Regression check on the pipeline seeds (calibrate on samples 4..19,
// measure on baseline samples 0..3): reference <= FP16 <= W8A16 <= W8A8.
TEST(Modes, ErrorOrderingOnBundledGraphs) {
  for (const auto& name : {"toy_conv", "toy_lpr", "toy_yolo", "toy_yolo_int", "toy_dynamic"}) {
    const auto e = mode_errors(deployable(name));
    EXPECT_LE(0.0, e.fp16) << name;
    EXPECT_LE(e.fp16, e.w8a16) << name;
    EXPECT_LE(e.w8a16, e.w8a8) << name;
  }
}

// toy_einsum has no real weights, so both integer modes are dominated by the
// same clamp of held-out inputs past the calibrated range and land within
// 0.1% of each other; W8A16 is not strictly below W8A8 there.
TEST(Modes, EinsumQuantErrorIsClampDominated) {
  const auto e = mode_errors(deployable("toy_einsum"));
  EXPECT_LE(e.fp16, e.w8a16);
  EXPECT_NEAR(e.w8a16, e.w8a8, 1e-3 * e.w8a8);
}

TEST(Modes, ToyConvW8A8WithinQuantThreshold) {
  const Graph g = zoo_graph("toy_conv");
  const auto& qnn = builtin_profile("qnn-like");
  const auto a = compile(g, qnn, PrecisionMode::W8A8, calibrate(g, cal_set(g, 42, 4, 16), PrecisionMode::W8A8));
  AlignmentReport acc;
  const Tolerance tol{0.0, 0.05, 1e-6};
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto feeds = generate_feeds(g, 42, i);
    merge_into(acc, compare(run_artifact(a, feeds).outputs, Session(g).run(feeds).outputs, tol));
  }
  EXPECT_TRUE(acc.pass);
  EXPECT_LT(acc.max_rel(), 0.05);
}

TEST(Modes, Fp16RunUsesHalfGrid) {
  const Graph g = zoo_graph("toy_conv");
  const auto a = compile(g, builtin_profile("qnn-like"), PrecisionMode::FP16);
  const auto out = run_fp16(a, generate_feeds(g, 3, 0));
  for (float v : out.outputs[0].second.floats()) EXPECT_EQ(v, round_f16(v));
}

}  // namespace
}  // namespace portir
