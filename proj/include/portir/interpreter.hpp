// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "portir/graph.hpp"
#include "portir/quant.hpp"
#include "portir/tensor.hpp"

namespace portir {

struct CapabilityProfile;

/// Reference: exact F32/I64 semantics. TargetFp16: every float tensor is
/// rounded to binary16 where it is produced. TargetQuant: every float tensor
/// is quantize-dequantized where it is produced.
enum class BackendKind { Reference, TargetFp16, TargetQuant };

std::string_view backend_name(BackendKind kind);

struct NodeProfile {
  std::string node_id;
  OpKind op = OpKind::Add;
  std::int64_t elements = 0;
  std::chrono::nanoseconds elapsed{0};
};

struct RunProfile {
  std::vector<NodeProfile> nodes;
  std::int64_t total_elements = 0;
  std::chrono::nanoseconds total_elapsed{0};
};

struct RunResult {
  /// Graph outputs in declaration order.
  TensorList outputs;
  RunProfile profile;
};

using TensorObserver = std::function<void(const std::string& tensor, const TensorValue& value)>;

inline constexpr std::string_view kObserveAll = "*";

struct SessionOptions {
  BackendKind backend = BackendKind::Reference;
  /// Observers keyed by tensor name; kObserveAll sees every tensor. They run
  /// after the backend's boundary transform.
  std::map<std::string, TensorObserver, std::less<>> observers;
  /// Required for TargetQuant: params for every float tensor.
  QuantParamMap quant_params;
  /// When set, non-reference sessions refuse ops outside the profile.
  const CapabilityProfile* profile = nullptr;
};

/// An executable graph bound to one backend. Immutable after creation;
/// run() is reentrant as long as observers are.
class Session {
 public:
  /// Infers shapes if needed. Throws InvalidGraph, StaticShapeRequired,
  /// UnsupportedBackendOp or MissingParams.
  Session(const Graph& graph, SessionOptions options = {});

  const Graph& graph() const { return graph_; }
  BackendKind backend() const { return options_.backend; }

  /// Throws FeedMismatch on missing, extra or mistyped feeds and NumericError
  /// on integer division by zero.
  RunResult run(const TensorList& feeds) const;

 private:
  void transform(const std::string& name, TensorValue& value) const;
  void observe(const std::string& name, const TensorValue& value) const;

  Graph graph_;
  SessionOptions options_;
  std::vector<std::size_t> order_;
};

Session create_session(const Graph& graph, BackendKind backend);

/// Evaluates one node on concrete inputs with reference semantics.
TensorValue evaluate_node(const Graph& graph, const Node& node, const std::vector<const TensorValue*>& inputs);

struct Tolerance {
  double atol = 1e-5;
  double rtol = 1e-4;
  double denom_floor = 1e-6;
};

struct OutputAlignment {
  std::string name;
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::int64_t elements = 0;
  std::int64_t violations = 0;
  /// Non-empty when names, dtypes or shapes disagree.
  std::string structural;
  bool pass = true;
};

struct AlignmentReport {
  std::vector<OutputAlignment> outputs;
  bool pass = true;

  double max_abs() const;
  double max_rel() const;
};

/// Elementwise: an element passes when |a-b| <= atol or
/// |a-b| / max(|b|, denom_floor) <= rtol. Matching NaNs and equal infinities
/// pass. Structural disagreements fail the output instead of throwing.
AlignmentReport compare(const TensorList& actual, const TensorList& baseline, const Tolerance& tol);

/// Folds another sample's report into `acc` (max errors, summed counts).
void merge_into(AlignmentReport& acc, const AlignmentReport& other);

/// Deterministic feeds for sample `index`: uniform over each input's declared
/// range, defaulting to [-1, 1] for floats and [0, 9] for integers.
TensorList generate_feeds(const Graph& graph, std::uint64_t seed, std::uint64_t index);

}  // namespace portir
