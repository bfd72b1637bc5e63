// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "portir/capability.hpp"
#include "portir/graph.hpp"
#include "portir/interpreter.hpp"
#include "portir/knowledge_base.hpp"

namespace portir {

using Bindings = std::map<std::string, std::int64_t>;

/// Replaces a float Mod with Sub(a, Mul(b, Floor(Div(a, b)))).
/// Throws WrongOpKind or WrongDtype.
Graph expand_mod_float(const Graph& graph, const std::string& node_id);

/// Replaces an integer Mod with Sub(a, Mul(b, Div(a, b))) using truncating
/// Div. Throws WrongOpKind, WrongDtype, or SignUnsafe unless both operands are
/// provably nonnegative.
Graph expand_mod_integer(const Graph& graph, const std::string& node_id);

/// Rewrites Floor(Div(x, y)) over nonnegative integer-valued floats to
/// Cast(Div_i64(x', y')). Throws WrongOpKind or PatternMismatch.
Graph eliminate_floor(const Graph& graph, const std::string& node_id);

/// Lowers a two-operand Einsum to Transpose/Reshape/MatMul. Throws
/// WrongOpKind, UnsupportedEquation or StaticShapeRequired.
Graph lower_einsum(const Graph& graph, const std::string& node_id);

/// Replaces MaxPool3d with two MaxPool2d stages. Throws WrongOpKind,
/// UnsupportedPadding, BadRank or StaticShapeRequired.
Graph decompose_maxpool3d(const Graph& graph, const std::string& node_id);

/// Substitutes every symbolic dim. Throws UnboundSymbol or ConflictingBinding.
Graph bind_shapes(const Graph& graph, const Bindings& bindings);

/// Sorted symbol names used by the graph's inputs and outputs.
std::vector<std::string> graph_symbols(const Graph& graph);

/// Interval and integrality facts provable from range metadata, dtypes and
/// constant payloads. nullopt when nothing is known.
struct ValueBounds {
  double lo = 0.0;
  double hi = 0.0;
  bool integral = false;
};
std::optional<ValueBounds> value_bounds(const Graph& graph, const std::string& tensor);

struct PassContext {
  Bindings bindings;
};

struct RewritePass {
  std::string id;
  /// Diagnostic signature patterns this pass claims to repair.
  std::vector<std::string> repairs;
  std::function<Graph(const Graph&, const Diagnostic&, const PassContext&)> transform;

  bool matches(const Diagnostic& d) const;
  /// True when transform would succeed on (graph, d).
  bool applicable(const Graph& graph, const Diagnostic& d, const PassContext& ctx) const;
};

/// expand_mod_float, expand_mod_integer, eliminate_floor, lower_einsum,
/// decompose_maxpool3d, bind_shapes, in that order.
const std::vector<RewritePass>& pass_registry();
const RewritePass* find_pass(std::string_view id);

struct PassReceipt {
  std::string pass_id;
  std::string signature;
  std::string target;
  std::vector<std::string> removed;
  std::vector<std::string> added;
  std::string timestamp;

  friend bool operator==(const PassReceipt&, const PassReceipt&) = default;
};

nlohmann::json receipt_to_json(const PassReceipt& r, bool with_timestamp = true);
PassReceipt receipt_from_json(const nlohmann::json& doc);

struct AppliedPass {
  Graph graph;
  PassReceipt receipt;
};

/// Applies the pass and returns the rewritten graph with its receipt.
AppliedPass apply_pass(const Graph& graph, const RewritePass& pass, const Diagnostic& d, const PassContext& ctx);

struct IoSignature {
  std::vector<TensorSpec> inputs;
  std::vector<TensorSpec> outputs;
  friend bool operator==(const IoSignature&, const IoSignature&) = default;
};

/// Names, order, dtypes and shapes of the graph interface. Bindings are
/// substituted into symbolic dims; range metadata is dropped.
IoSignature io_signature(const Graph& graph, const Bindings& bindings = {});
nlohmann::json io_signature_to_json(const IoSignature& sig);
std::string describe_difference(const IoSignature& a, const IoSignature& b);

struct EquivalenceOptions {
  int trials = 64;
  Tolerance tol;
  std::uint64_t seed = 0;
  Bindings bindings;
};

struct EquivalenceReport {
  int trials = 0;
  int agreeing = 0;
  double max_abs = 0.0;
  double max_rel = 0.0;
  bool pass = true;
  std::string first_failure;
};

/// Runs both graphs on the same seeded feeds. Integer outputs must match
/// exactly; float outputs within opts.tol. NumericError on both sides counts
/// as agreement. Throws SignatureMismatch when the interfaces differ.
EquivalenceReport verify_equivalence(const Graph& pre, const Graph& post, const EquivalenceOptions& opts);

struct RepairPlan {
  Diagnostic diagnostic;
  std::vector<std::string> candidates;
};

/// Per diagnostic: KB passes with recorded successes, then matching registry
/// passes, then remaining KB passes. Unknown pass ids are skipped.
std::vector<RepairPlan> plan_repairs(const std::vector<Diagnostic>& diags, const KnowledgeBase& kb,
                                     const std::vector<RewritePass>& registry);

}  // namespace portir
