// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/interpreter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "portir/capability.hpp"
#include "portir/error.hpp"
#include "portir/half.hpp"
#include "portir/shape_inference.hpp"

namespace portir {

std::string_view backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::Reference: return "reference";
    case BackendKind::TargetFp16: return "fp16";
    case BackendKind::TargetQuant: return "quant";
  }
  return "?";
}

Session::Session(const Graph& graph, SessionOptions options) : options_(std::move(options)) {
  require_valid(graph);
  graph_ = infer_shapes(graph);
  if (!graph_.is_static()) {
    fail(ErrorCode::StaticShapeRequired, "graph '" + graph_.name + "' has symbolic dimensions");
  }
  if (options_.backend != BackendKind::Reference && options_.profile) {
    for (const auto& n : graph_.nodes) {
      if (!options_.profile->supported_ops.contains(n.op)) {
        fail(ErrorCode::UnsupportedBackendOp, "op " + std::string(op_name(n.op)) + " (node '" + n.id +
                                                  "') is not supported by profile '" + options_.profile->name + "'");
      }
    }
  }
  if (options_.backend == BackendKind::TargetQuant) {
    for (const auto& [name, spec] : graph_.value_specs) {
      if (is_float(spec.dtype) && !options_.quant_params.contains(name)) {
        fail(ErrorCode::MissingParams, "no quantization params for tensor '" + name + "'");
      }
    }
  }
  order_ = graph_.topological_order();
}

void Session::transform(const std::string& name, TensorValue& value) const {
  if (!is_float(value.dtype())) return;
  switch (options_.backend) {
    case BackendKind::Reference: break;
    case BackendKind::TargetFp16:
      for (auto& v : value.floats()) v = f16_bits_to_f32(f32_to_f16_bits(v));
      break;
    case BackendKind::TargetQuant: {
      const auto& p = options_.quant_params.at(name);
      for (auto& v : value.floats()) v = fake_quant(v, p);
      break;
    }
  }
}

void Session::observe(const std::string& name, const TensorValue& value) const {
  if (auto it = options_.observers.find(name); it != options_.observers.end()) it->second(name, value);
  if (auto it = options_.observers.find(kObserveAll); it != options_.observers.end()) it->second(name, value);
}

RunResult Session::run(const TensorList& feeds) const {
  std::map<std::string, TensorValue, std::less<>> env;
  for (const auto& [name, value] : feeds) {
    const TensorSpec* spec = graph_.input_spec(name);
    if (!spec) fail(ErrorCode::FeedMismatch, "feed '" + name + "' is not a graph input");
    if (env.contains(name)) fail(ErrorCode::FeedMismatch, "feed '" + name + "' given twice");
    if (value.dtype() != spec->dtype) {
      fail(ErrorCode::FeedMismatch, "feed '" + name + "' has dtype " + std::string(dtype_name(value.dtype())) +
                                        ", expected " + std::string(dtype_name(spec->dtype)));
    }
    if (value.shape() != to_static(spec->shape)) {
      fail(ErrorCode::FeedMismatch, "feed '" + name + "' has shape " + shape_to_string(value.shape()) +
                                        ", expected " + shape_to_string(spec->shape));
    }
    env.emplace(name, value);
  }
  for (const auto& in : graph_.inputs) {
    auto it = env.find(in.name);
    if (it == env.end()) fail(ErrorCode::FeedMismatch, "missing feed for input '" + in.name + "'");
    transform(in.name, it->second);
    observe(in.name, it->second);
  }

  RunResult result;
  std::vector<const TensorValue*> args;
  for (auto idx : order_) {
    const Node& n = graph_.nodes[idx];
    args.clear();
    for (const auto& in : n.inputs) args.push_back(&env.at(in));
    const auto start = std::chrono::steady_clock::now();
    TensorValue out = evaluate_node(graph_, n, args);
    transform(n.outputs[0], out);
    const auto elapsed = std::chrono::steady_clock::now() - start;
    observe(n.outputs[0], out);
    NodeProfile np{n.id, n.op, out.numel(), std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed)};
    result.profile.total_elements += np.elements;
    result.profile.total_elapsed += np.elapsed;
    result.profile.nodes.push_back(std::move(np));
    env.insert_or_assign(n.outputs[0], std::move(out));
  }
  for (const auto& out : graph_.outputs) result.outputs.emplace_back(out.name, env.at(out.name));
  return result;
}

Session create_session(const Graph& graph, BackendKind backend) {
  SessionOptions options;
  options.backend = backend;
  return Session(graph, std::move(options));
}

double AlignmentReport::max_abs() const {
  double m = 0.0;
  for (const auto& o : outputs) m = std::max(m, o.max_abs);
  return m;
}

double AlignmentReport::max_rel() const {
  double m = 0.0;
  for (const auto& o : outputs) m = std::max(m, o.max_rel);
  return m;
}

namespace {

OutputAlignment align(const std::string& name, const TensorValue& a, const TensorValue& b, const Tolerance& tol) {
  OutputAlignment r;
  r.name = name;
  if (a.dtype() != b.dtype()) {
    r.structural = "dtype " + std::string(dtype_name(a.dtype())) + " vs baseline " + std::string(dtype_name(b.dtype()));
  } else if (a.shape() != b.shape()) {
    r.structural = "shape " + shape_to_string(a.shape()) + " vs baseline " + shape_to_string(b.shape());
  }
  if (!r.structural.empty()) {
    r.pass = false;
    return r;
  }
  r.elements = a.numel();
  for (std::int64_t i = 0; i < r.elements; ++i) {
    const double x = a.at(i);
    const double y = b.at(i);
    if ((std::isnan(x) && std::isnan(y)) || x == y) continue;
    const double diff = std::fabs(x - y);
    const double rel = diff / std::max(std::fabs(y), tol.denom_floor);
    if (std::isnan(diff)) {
      r.max_abs = std::numeric_limits<double>::infinity();
      r.max_rel = std::numeric_limits<double>::infinity();
      ++r.violations;
      continue;
    }
    r.max_abs = std::max(r.max_abs, diff);
    r.max_rel = std::max(r.max_rel, rel);
    if (!(diff <= tol.atol || rel <= tol.rtol)) ++r.violations;
  }
  r.pass = r.violations == 0;
  return r;
}

}  // namespace

AlignmentReport compare(const TensorList& actual, const TensorList& baseline, const Tolerance& tol) {
  AlignmentReport report;
  for (const auto& [name, expected] : baseline) {
    const TensorValue* got = find_tensor(actual, name);
    if (!got) {
      OutputAlignment r;
      r.name = name;
      r.structural = "missing output";
      r.pass = false;
      report.outputs.push_back(std::move(r));
      continue;
    }
    report.outputs.push_back(align(name, *got, expected, tol));
  }
  for (const auto& [name, value] : actual) {
    if (!find_tensor(baseline, name)) {
      OutputAlignment r;
      r.name = name;
      r.structural = "unexpected output";
      r.pass = false;
      report.outputs.push_back(std::move(r));
    }
  }
  if (actual.size() == baseline.size()) {
    for (std::size_t i = 0; i < actual.size(); ++i) {
      if (actual[i].first != baseline[i].first && report.outputs[i].structural.empty()) {
        report.outputs[i].structural = "output order differs";
        report.outputs[i].pass = false;
      }
    }
  }
  for (const auto& o : report.outputs) report.pass = report.pass && o.pass;
  return report;
}

void merge_into(AlignmentReport& acc, const AlignmentReport& other) {
  if (acc.outputs.empty()) {
    acc = other;
    return;
  }
  for (const auto& o : other.outputs) {
    auto it = std::find_if(acc.outputs.begin(), acc.outputs.end(), [&](const auto& a) { return a.name == o.name; });
    if (it == acc.outputs.end()) {
      acc.outputs.push_back(o);
      continue;
    }
    it->max_abs = std::max(it->max_abs, o.max_abs);
    it->max_rel = std::max(it->max_rel, o.max_rel);
    it->elements += o.elements;
    it->violations += o.violations;
    if (it->structural.empty()) it->structural = o.structural;
    it->pass = it->pass && o.pass;
  }
  acc.pass = acc.pass && other.pass;
}

TensorList generate_feeds(const Graph& graph, std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  TensorList feeds;
  for (const auto& in : graph.inputs) {
    if (!is_static(in.shape)) {
      fail(ErrorCode::StaticShapeRequired, "input '" + in.name + "' has symbolic shape " + shape_to_string(in.shape));
    }
    TensorValue t(in.dtype, to_static(in.shape));
    if (is_float(in.dtype)) {
      const double lo = in.range ? in.range->lo : -1.0;
      const double hi = in.range ? in.range->hi : 1.0;
      for (auto& v : t.floats()) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v = static_cast<float>(lo + (hi - lo) * u);
        if (in.dtype == DType::F16) v = f16_bits_to_f32(f32_to_f16_bits(v));
      }
    } else {
      auto lo = in.range ? static_cast<std::int64_t>(std::ceil(in.range->lo)) : 0;
      auto hi = in.range ? static_cast<std::int64_t>(std::floor(in.range->hi)) : 9;
      lo = std::clamp(lo, dtype_min(in.dtype), dtype_max(in.dtype));
      hi = std::clamp(hi, lo, dtype_max(in.dtype));
      const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
      for (auto& v : t.ints()) v = lo + static_cast<std::int64_t>(span == 0 ? rng() : rng() % span);
    }
    feeds.emplace_back(in.name, std::move(t));
  }
  return feeds;
}

}  // namespace portir
