// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "portir/dtype.hpp"
#include "portir/tensor.hpp"

namespace portir {

inline constexpr std::size_t kMaxRank = 5;

/// A tensor dimension: a positive static extent or a named symbol.
class Dim {
 public:
  Dim() : value_(std::int64_t{1}) {}
  static Dim fixed(std::int64_t size) { return Dim(size); }
  static Dim symbol(std::string name) { return Dim(std::move(name)); }

  bool is_static() const { return std::holds_alternative<std::int64_t>(value_); }
  std::int64_t size() const { return std::get<std::int64_t>(value_); }
  const std::string& name() const { return std::get<std::string>(value_); }
  std::string to_string() const;

  friend bool operator==(const Dim&, const Dim&) = default;

 private:
  explicit Dim(std::int64_t size) : value_(size) {}
  explicit Dim(std::string name) : value_(std::move(name)) {}
  std::variant<std::int64_t, std::string> value_;
};

using Shape = std::vector<Dim>;

Shape make_shape(const StaticShape& dims);
bool is_static(const Shape& shape);
/// Requires is_static(shape).
StaticShape to_static(const Shape& shape);
std::string shape_to_string(const Shape& shape);
bool is_identifier(std::string_view text);

/// Declared closed value interval for a graph input.
struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

struct TensorSpec {
  std::string name;
  DType dtype = DType::F32;
  Shape shape;
  std::optional<ValueRange> range;

  friend bool operator==(const TensorSpec&, const TensorSpec&) = default;
};

using AttrValue = std::variant<std::int64_t, double, std::string, std::vector<std::int64_t>>;
using Attributes = std::map<std::string, AttrValue>;

enum class OpKind : std::uint8_t {
  Constant,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
  Floor,
  Neg,
  Relu,
  Exp,
  Cast,
  MatMul,
  Einsum,
  Transpose,
  Reshape,
  Concat,
  ReduceMax,
  ReduceSum,
  Softmax,
  MaxPool2d,
  MaxPool3d,
  Conv2d,
};

inline constexpr std::size_t kOpKindCount = 22;
const std::vector<OpKind>& all_op_kinds();
std::string_view op_name(OpKind op);
std::optional<OpKind> parse_op(std::string_view text);

/// Input/output arity of an op. max_inputs < 0 means unbounded.
struct OpSignature {
  int min_inputs;
  int max_inputs;
  int outputs;
};
OpSignature op_signature(OpKind op);

struct Node {
  std::string id;
  OpKind op = OpKind::Add;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Attributes attrs;

  std::optional<std::int64_t> int_attr(const std::string& key) const;
  std::optional<std::vector<std::int64_t>> ints_attr(const std::string& key) const;
  std::optional<std::string> string_attr(const std::string& key) const;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Graph {
  std::string name;
  std::vector<TensorSpec> inputs;
  std::vector<TensorSpec> outputs;
  std::vector<Node> nodes;
  /// Payloads referenced by Constant nodes through their "value" attribute.
  std::map<std::string, TensorValue> constants;
  /// Specs of every tensor; filled by infer_shapes, empty before.
  std::map<std::string, TensorSpec> value_specs;

  const Node* find_node(std::string_view id) const;
  const Node* producer(std::string_view tensor) const;
  std::vector<const Node*> consumers(std::string_view tensor) const;
  const TensorSpec* input_spec(std::string_view name) const;
  /// Inferred spec of any tensor, or nullptr before infer_shapes.
  const TensorSpec* spec(std::string_view tensor) const;
  bool has_tensor(std::string_view name) const;
  bool has_node(std::string_view id) const;
  bool is_static() const;

  /// Node indices in a deterministic topological order (stable w.r.t.
  /// declaration order). Requires a valid graph.
  std::vector<std::size_t> topological_order() const;
};

/// Structural equality: name, signature, nodes, and constant payloads.
/// value_specs is derived data and is not compared.
bool operator==(const Graph& a, const Graph& b);

enum class Violation { UndefinedInput, Cycle, DuplicateName, BadArity, BadAttribute };
std::string_view violation_name(Violation v);

inline constexpr std::string_view kGraphLevel = "<graph>";

struct StructuralError {
  std::string node_id;
  Violation kind;
  std::string message;
};

std::vector<StructuralError> validate_graph(const Graph& graph);
/// Throws InvalidGraph listing every structural error.
void require_valid(const Graph& graph);

}  // namespace portir
