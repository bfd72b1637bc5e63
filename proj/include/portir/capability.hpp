// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "portir/graph.hpp"

namespace portir {

enum class PrecisionMode { FP16, W8A16, W8A8 };

std::string_view mode_name(PrecisionMode mode);
PrecisionMode parse_mode(std::string_view text);
bool is_quant_mode(PrecisionMode mode);

/// Equality or range bound on an integer (or int-list, checked per element)
/// attribute.
struct AttrConstraint {
  std::optional<std::int64_t> eq;
  std::optional<std::int64_t> min;
  std::optional<std::int64_t> max;

  bool admits(std::int64_t value) const;
  friend bool operator==(const AttrConstraint&, const AttrConstraint&) = default;
};

struct CapabilityProfile {
  std::string name;
  std::set<OpKind> supported_ops;
  std::map<OpKind, std::map<std::string, AttrConstraint>> op_constraints;
  std::set<DType> dtypes;
  bool requires_static_shapes = true;
  std::vector<PrecisionMode> precision_modes;
  bool preserve_io = true;

  bool supports(PrecisionMode mode) const;
  friend bool operator==(const CapabilityProfile&, const CapabilityProfile&) = default;
};

/// Throws ParseError on schema errors, InvalidProfile on ops or dtypes outside
/// the dialect or an empty mode list.
CapabilityProfile load_profile(const nlohmann::json& doc);
CapabilityProfile load_profile_text(std::string_view text);
nlohmann::json profile_to_json(const CapabilityProfile& profile);

std::vector<std::string> builtin_profile_names();
const CapabilityProfile& builtin_profile(std::string_view name);
/// A built-in name or a path to a *.profile.json file.
CapabilityProfile resolve_profile(const std::string& name_or_path);

enum class DiagnosticKind { UnsupportedOp, DynamicShape, UnsupportedDtype, UnsupportedAttribute };

std::string_view diagnostic_kind_name(DiagnosticKind kind);

struct Diagnostic {
  /// Node id, or kGraphLevel for graph inputs.
  std::string node_id;
  DiagnosticKind kind = DiagnosticKind::UnsupportedOp;
  /// Op name or "-" when not tied to a node.
  std::string op = "-";
  /// dtype class of the node's first input ("float"/"int") or "-".
  std::string dtype_class = "-";
  /// Human detail: symbol, dtype, attribute or op payload.
  std::string detail;

  /// Knowledge-base key "Kind/Op/dtypeclass".
  std::string signature() const;
  std::string to_string() const;
  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Matches signature patterns where each of the three parts may be "*".
bool signature_matches(std::string_view pattern, std::string_view signature);

/// One diagnostic per violation, in topological node order after the
/// graph-level ones. Requires inferred shapes; infers them if absent.
std::vector<Diagnostic> check_compatibility(const Graph& graph, const CapabilityProfile& profile);

nlohmann::json diagnostic_to_json(const Diagnostic& d);

}  // namespace portir
