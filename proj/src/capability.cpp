// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/capability.hpp"

#include <algorithm>
#include <sstream>

#include "portir/error.hpp"
#include "portir/io.hpp"
#include "portir/shape_inference.hpp"

namespace portir {

using nlohmann::json;

std::string_view mode_name(PrecisionMode mode) {
  switch (mode) {
    case PrecisionMode::FP16: return "FP16";
    case PrecisionMode::W8A16: return "W8A16";
    case PrecisionMode::W8A8: return "W8A8";
  }
  return "?";
}

PrecisionMode parse_mode(std::string_view text) {
  for (auto m : {PrecisionMode::FP16, PrecisionMode::W8A16, PrecisionMode::W8A8}) {
    if (mode_name(m) == text) return m;
  }
  fail(ErrorCode::ParseError, "unknown precision mode '" + std::string(text) + "'");
}

bool is_quant_mode(PrecisionMode mode) { return mode != PrecisionMode::FP16; }

bool AttrConstraint::admits(std::int64_t value) const {
  if (eq && value != *eq) return false;
  if (min && value < *min) return false;
  if (max && value > *max) return false;
  return true;
}

bool CapabilityProfile::supports(PrecisionMode mode) const {
  return std::find(precision_modes.begin(), precision_modes.end(), mode) != precision_modes.end();
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, const std::string& msg) {
  fail(ErrorCode::ParseError, "profile " + path + ": " + msg);
}

const json& require(const json& obj, const std::string& key) {
  if (!obj.contains(key)) parse_fail(key, "missing field");
  return obj.at(key);
}

std::vector<std::string> string_list(const json& obj, const std::string& key) {
  const json& arr = require(obj, key);
  if (!arr.is_array()) parse_fail(key, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) parse_fail(key + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

bool get_bool(const json& obj, const std::string& key) {
  const json& v = require(obj, key);
  if (!v.is_boolean()) parse_fail(key, "expected a boolean");
  return v.get<bool>();
}

OpKind profile_op(const std::string& name) {
  auto op = parse_op(name);
  if (!op) fail(ErrorCode::InvalidProfile, "op '" + name + "' is not in the dialect");
  return *op;
}

}  // namespace

CapabilityProfile load_profile(const json& doc) {
  if (!doc.is_object()) parse_fail("<root>", "expected an object");
  CapabilityProfile p;
  const json& name = require(doc, "name");
  if (!name.is_string() || name.get<std::string>().empty()) parse_fail("name", "expected a non-empty string");
  p.name = name.get<std::string>();
  for (const auto& op : string_list(doc, "supported_ops")) p.supported_ops.insert(profile_op(op));
  if (doc.contains("op_constraints")) {
    const json& oc = doc.at("op_constraints");
    if (!oc.is_object()) parse_fail("op_constraints", "expected an object");
    for (const auto& [op, attrs] : oc.items()) {
      const OpKind kind = profile_op(op);
      if (!attrs.is_object()) parse_fail("op_constraints." + op, "expected an object");
      for (const auto& [attr, bounds] : attrs.items()) {
        const std::string path = "op_constraints." + op + "." + attr;
        if (!bounds.is_object() || bounds.empty()) parse_fail(path, "expected an object with eq, min or max");
        AttrConstraint c;
        for (const auto& [k, v] : bounds.items()) {
          if (!v.is_number_integer()) parse_fail(path + "." + k, "expected an integer");
          if (k == "eq") {
            c.eq = v.get<std::int64_t>();
          } else if (k == "min") {
            c.min = v.get<std::int64_t>();
          } else if (k == "max") {
            c.max = v.get<std::int64_t>();
          } else {
            parse_fail(path + "." + k, "unknown bound");
          }
        }
        p.op_constraints[kind][attr] = c;
      }
    }
  }
  for (const auto& d : string_list(doc, "dtypes")) {
    try {
      p.dtypes.insert(parse_dtype(d));
    } catch (const Error&) {
      fail(ErrorCode::InvalidProfile, "dtype '" + d + "' is not in the dialect");
    }
  }
  p.requires_static_shapes = get_bool(doc, "requires_static_shapes");
  for (const auto& m : string_list(doc, "precision_modes")) {
    const auto mode = parse_mode(m);
    if (!p.supports(mode)) p.precision_modes.push_back(mode);
  }
  if (p.precision_modes.empty()) fail(ErrorCode::InvalidProfile, "profile '" + p.name + "' lists no precision mode");
  p.preserve_io = get_bool(doc, "preserve_io");
  return p;
}

CapabilityProfile load_profile_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("profile: ") + e.what());
  }
  return load_profile(doc);
}

json profile_to_json(const CapabilityProfile& p) {
  json doc;
  doc["name"] = p.name;
  doc["supported_ops"] = json::array();
  for (auto op : p.supported_ops) doc["supported_ops"].push_back(std::string(op_name(op)));
  doc["op_constraints"] = json::object();
  for (const auto& [op, attrs] : p.op_constraints) {
    json a = json::object();
    for (const auto& [attr, c] : attrs) {
      json b = json::object();
      if (c.eq) b["eq"] = *c.eq;
      if (c.min) b["min"] = *c.min;
      if (c.max) b["max"] = *c.max;
      a[attr] = b;
    }
    doc["op_constraints"][std::string(op_name(op))] = a;
  }
  doc["dtypes"] = json::array();
  for (auto d : p.dtypes) doc["dtypes"].push_back(std::string(dtype_name(d)));
  doc["requires_static_shapes"] = p.requires_static_shapes;
  doc["precision_modes"] = json::array();
  for (auto m : p.precision_modes) doc["precision_modes"].push_back(std::string(mode_name(m)));
  doc["preserve_io"] = p.preserve_io;
  return doc;
}

namespace {

#include "portir/builtin_profiles.inc"

const std::map<std::string, CapabilityProfile, std::less<>>& builtins() {
  static const auto table = [] {
    std::map<std::string, CapabilityProfile, std::less<>> t;
    for (std::string_view text : kBuiltinProfiles) {
      auto p = load_profile_text(text);
      t.emplace(p.name, std::move(p));
    }
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> builtin_profile_names() {
  std::vector<std::string> names;
  for (const auto& [n, p] : builtins()) names.push_back(n);
  return names;
}

const CapabilityProfile& builtin_profile(std::string_view name) {
  auto it = builtins().find(name);
  if (it == builtins().end()) fail(ErrorCode::InvalidProfile, "no built-in profile '" + std::string(name) + "'");
  return it->second;
}

CapabilityProfile resolve_profile(const std::string& name_or_path) {
  if (auto it = builtins().find(name_or_path); it != builtins().end()) return it->second;
  if (!fs::exists(name_or_path)) {
    fail(ErrorCode::InvalidProfile, "'" + name_or_path + "' is neither a built-in profile nor a file");
  }
  return load_profile_text(read_text(name_or_path));
}

std::string_view diagnostic_kind_name(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::UnsupportedOp: return "UnsupportedOp";
    case DiagnosticKind::DynamicShape: return "DynamicShape";
    case DiagnosticKind::UnsupportedDtype: return "UnsupportedDtype";
    case DiagnosticKind::UnsupportedAttribute: return "UnsupportedAttribute";
  }
  return "?";
}

std::string Diagnostic::signature() const {
  return std::string(diagnostic_kind_name(kind)) + "/" + op + "/" + dtype_class;
}

std::string Diagnostic::to_string() const {
  std::ostringstream os;
  os << diagnostic_kind_name(kind);
  if (op != "-") os << "(" << op << ")";
  os << " at " << (node_id == kGraphLevel ? std::string("graph level") : "node '" + node_id + "'");
  if (!detail.empty()) os << ": " << detail;
  return os.str();
}

bool signature_matches(std::string_view pattern, std::string_view signature) {
  auto split = [](std::string_view s) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == '/') {
        parts.push_back(s.substr(start, i - start));
        start = i + 1;
      }
    }
    return parts;
  };
  const auto p = split(pattern);
  const auto s = split(signature);
  if (p.size() != s.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != "*" && p[i] != s[i]) return false;
  }
  return true;
}

std::vector<Diagnostic> check_compatibility(const Graph& input, const CapabilityProfile& profile) {
  const Graph g = input.value_specs.empty() ? infer_shapes(input) : input;
  std::vector<Diagnostic> diags;

  auto graph_diag = [&](DiagnosticKind kind, std::string dclass, std::string detail) {
    Diagnostic d;
    d.node_id = std::string(kGraphLevel);
    d.kind = kind;
    d.dtype_class = std::move(dclass);
    d.detail = std::move(detail);
    diags.push_back(std::move(d));
  };

  if (profile.requires_static_shapes) {
    for (const auto& in : g.inputs) {
      for (std::size_t i = 0; i < in.shape.size(); ++i) {
        if (!in.shape[i].is_static()) {
          graph_diag(DiagnosticKind::DynamicShape, "-",
                     "input '" + in.name + "' dim " + std::to_string(i) + " is symbolic '" + in.shape[i].name() + "'");
        }
      }
    }
  }
  for (const auto* list : {&g.inputs, &g.outputs}) {
    for (const auto& s : *list) {
      if (!profile.dtypes.contains(s.dtype)) {
        graph_diag(DiagnosticKind::UnsupportedDtype, std::string(dtype_class(s.dtype)),
                   "tensor '" + s.name + "' has dtype " + std::string(dtype_name(s.dtype)));
      }
    }
  }

  for (auto idx : g.topological_order()) {
    const Node& n = g.nodes[idx];
    const TensorSpec* first = n.inputs.empty() ? g.spec(n.outputs[0]) : g.spec(n.inputs[0]);
    const std::string dclass = first ? std::string(dtype_class(first->dtype)) : "-";
    auto node_diag = [&](DiagnosticKind kind, std::string detail) {
      diags.push_back(Diagnostic{n.id, kind, std::string(op_name(n.op)), dclass, std::move(detail)});
    };
    if (!profile.supported_ops.contains(n.op)) {
      node_diag(DiagnosticKind::UnsupportedOp, "op " + std::string(op_name(n.op)) + " on " + dclass + " operands");
    }
    if (auto it = profile.op_constraints.find(n.op); it != profile.op_constraints.end()) {
      for (const auto& [attr, c] : it->second) {
        auto a = n.attrs.find(attr);
        if (a == n.attrs.end()) continue;
        std::vector<std::int64_t> values;
        if (const auto* v = std::get_if<std::int64_t>(&a->second)) values.push_back(*v);
        if (const auto* v = std::get_if<std::vector<std::int64_t>>(&a->second)) values = *v;
        const bool ok = std::all_of(values.begin(), values.end(), [&](auto v) { return c.admits(v); });
        if (!ok) node_diag(DiagnosticKind::UnsupportedAttribute, "attribute '" + attr + "' out of bounds");
      }
    }
    for (const auto& out : n.outputs) {
      const TensorSpec* s = g.spec(out);
      if (s && !profile.dtypes.contains(s->dtype)) {
        node_diag(DiagnosticKind::UnsupportedDtype, "output '" + out + "' has dtype " + std::string(dtype_name(s->dtype)));
      }
    }
  }
  return diags;
}

json diagnostic_to_json(const Diagnostic& d) {
  return json{{"node", d.node_id},
              {"kind", std::string(diagnostic_kind_name(d.kind))},
              {"op", d.op},
              {"dtype_class", d.dtype_class},
              {"signature", d.signature()},
              {"detail", d.detail}};
}

}  // namespace portir
