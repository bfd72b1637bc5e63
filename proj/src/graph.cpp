// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/graph.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "portir/error.hpp"

namespace portir {

std::string Dim::to_string() const { return is_static() ? std::to_string(size()) : name(); }

Shape make_shape(const StaticShape& dims) {
  Shape s;
  s.reserve(dims.size());
  for (auto d : dims) s.push_back(Dim::fixed(d));
  return s;
}

bool is_static(const Shape& shape) {
  return std::all_of(shape.begin(), shape.end(), [](const Dim& d) { return d.is_static(); });
}

StaticShape to_static(const Shape& shape) {
  StaticShape out;
  out.reserve(shape.size());
  for (const auto& d : shape) {
    if (!d.is_static()) fail(ErrorCode::StaticShapeRequired, "symbolic dim '" + d.name() + "'");
    out.push_back(d.size());
  }
  return out;
}

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += shape[i].to_string();
  }
  return s + "]";
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(text[0])) return false;
  return std::all_of(text.begin() + 1, text.end(), [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

namespace {

struct OpInfo {
  OpKind op;
  std::string_view name;
  OpSignature sig;
};

constexpr OpInfo kOps[] = {
    {OpKind::Constant, "Constant", {0, 0, 1}},  {OpKind::Add, "Add", {2, 2, 1}},
    {OpKind::Sub, "Sub", {2, 2, 1}},            {OpKind::Mul, "Mul", {2, 2, 1}},
    {OpKind::Div, "Div", {2, 2, 1}},            {OpKind::Mod, "Mod", {2, 2, 1}},
    {OpKind::Floor, "Floor", {1, 1, 1}},        {OpKind::Neg, "Neg", {1, 1, 1}},
    {OpKind::Relu, "Relu", {1, 1, 1}},          {OpKind::Exp, "Exp", {1, 1, 1}},
    {OpKind::Cast, "Cast", {1, 1, 1}},          {OpKind::MatMul, "MatMul", {2, 2, 1}},
    {OpKind::Einsum, "Einsum", {1, -1, 1}},     {OpKind::Transpose, "Transpose", {1, 1, 1}},
    {OpKind::Reshape, "Reshape", {1, 1, 1}},    {OpKind::Concat, "Concat", {1, -1, 1}},
    {OpKind::ReduceMax, "ReduceMax", {1, 1, 1}}, {OpKind::ReduceSum, "ReduceSum", {1, 1, 1}},
    {OpKind::Softmax, "Softmax", {1, 1, 1}},    {OpKind::MaxPool2d, "MaxPool2d", {1, 1, 1}},
    {OpKind::MaxPool3d, "MaxPool3d", {1, 1, 1}}, {OpKind::Conv2d, "Conv2d", {2, 3, 1}},
};
static_assert(std::size(kOps) == kOpKindCount);

}  // namespace

const std::vector<OpKind>& all_op_kinds() {
  static const std::vector<OpKind> ops = [] {
    std::vector<OpKind> v;
    for (const auto& info : kOps) v.push_back(info.op);
    return v;
  }();
  return ops;
}

std::string_view op_name(OpKind op) { return kOps[static_cast<std::size_t>(op)].name; }

std::optional<OpKind> parse_op(std::string_view text) {
  for (const auto& info : kOps) {
    if (info.name == text) return info.op;
  }
  return std::nullopt;
}

OpSignature op_signature(OpKind op) { return kOps[static_cast<std::size_t>(op)].sig; }

std::optional<std::int64_t> Node::int_attr(const std::string& key) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return std::nullopt;
  if (const auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
  return std::nullopt;
}

std::optional<std::vector<std::int64_t>> Node::ints_attr(const std::string& key) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return std::nullopt;
  if (const auto* v = std::get_if<std::vector<std::int64_t>>(&it->second)) return *v;
  return std::nullopt;
}

std::optional<std::string> Node::string_attr(const std::string& key) const {
  auto it = attrs.find(key);
  if (it == attrs.end()) return std::nullopt;
  if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
  return std::nullopt;
}

const Node* Graph::find_node(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const Node* Graph::producer(std::string_view tensor) const {
  for (const auto& n : nodes) {
    if (std::find(n.outputs.begin(), n.outputs.end(), tensor) != n.outputs.end()) return &n;
  }
  return nullptr;
}

std::vector<const Node*> Graph::consumers(std::string_view tensor) const {
  std::vector<const Node*> out;
  for (const auto& n : nodes) {
    if (std::find(n.inputs.begin(), n.inputs.end(), tensor) != n.inputs.end()) out.push_back(&n);
  }
  return out;
}

const TensorSpec* Graph::input_spec(std::string_view name) const {
  for (const auto& s : inputs) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const TensorSpec* Graph::spec(std::string_view tensor) const {
  auto it = value_specs.find(std::string(tensor));
  return it == value_specs.end() ? nullptr : &it->second;
}

bool Graph::has_tensor(std::string_view name) const {
  return input_spec(name) != nullptr || producer(name) != nullptr;
}

bool Graph::has_node(std::string_view id) const { return find_node(id) != nullptr; }

bool Graph::is_static() const {
  auto all_static = [](const std::vector<TensorSpec>& specs) {
    return std::all_of(specs.begin(), specs.end(), [](const TensorSpec& s) { return portir::is_static(s.shape); });
  };
  if (!all_static(inputs) || !all_static(outputs)) return false;
  return std::all_of(value_specs.begin(), value_specs.end(),
                     [](const auto& kv) { return portir::is_static(kv.second.shape); });
}

std::vector<std::size_t> Graph::topological_order() const {
  std::unordered_map<std::string, std::size_t> producer_of;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& out : nodes[i].outputs) producer_of.emplace(out, i);
  }
  std::vector<std::vector<std::size_t>> users(nodes.size());
  std::vector<std::size_t> pending(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& in : nodes[i].inputs) {
      auto it = producer_of.find(in);
      if (it != producer_of.end()) {
        users[it->second].push_back(i);
        ++pending[i];
      }
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(nodes.size());
  while (!ready.empty()) {
    auto i = ready.top();
    ready.pop();
    order.push_back(i);
    for (auto u : users[i]) {
      if (--pending[u] == 0) ready.push(u);
    }
  }
  return order;
}

bool operator==(const Graph& a, const Graph& b) {
  return a.name == b.name && a.inputs == b.inputs && a.outputs == b.outputs && a.nodes == b.nodes &&
         a.constants == b.constants;
}

std::string_view violation_name(Violation v) {
  switch (v) {
    case Violation::UndefinedInput: return "UndefinedInput";
    case Violation::Cycle: return "Cycle";
    case Violation::DuplicateName: return "DuplicateName";
    case Violation::BadArity: return "BadArity";
    case Violation::BadAttribute: return "BadAttribute";
  }
  return "?";
}

namespace {

class Validator {
 public:
  explicit Validator(const Graph& g) : g_(g) {}

  std::vector<StructuralError> run() {
    check_specs();
    check_nodes();
    check_outputs();
    check_cycles();
    return std::move(errors_);
  }

 private:
  void add(const std::string& node, Violation kind, std::string message) {
    errors_.push_back({node, kind, std::move(message)});
  }

  void check_spec(const TensorSpec& s, const char* role) {
    const std::string where = std::string(role) + " '" + s.name + "'";
    if (s.shape.size() > kMaxRank) add(std::string(kGraphLevel), Violation::BadAttribute, where + " exceeds rank 5");
    for (const auto& d : s.shape) {
      if (d.is_static() && d.size() < 1) add(std::string(kGraphLevel), Violation::BadAttribute, where + " has a non-positive dim");
      if (!d.is_static() && !is_identifier(d.name())) {
        add(std::string(kGraphLevel), Violation::BadAttribute, where + " has invalid symbol '" + d.name() + "'");
      }
    }
    if (s.range && !(s.range->lo <= s.range->hi)) {
      add(std::string(kGraphLevel), Violation::BadAttribute, where + " has an empty value range");
    }
  }

  void check_specs() {
    std::set<std::string> seen;
    for (const auto& s : g_.inputs) {
      check_spec(s, "input");
      if (!seen.insert(s.name).second) add(std::string(kGraphLevel), Violation::DuplicateName, "duplicate graph input '" + s.name + "'");
      defined_.insert(s.name);
    }
    std::set<std::string> outs;
    for (const auto& s : g_.outputs) {
      check_spec(s, "output");
      if (!outs.insert(s.name).second) add(std::string(kGraphLevel), Violation::DuplicateName, "duplicate graph output '" + s.name + "'");
    }
  }

  void check_nodes() {
    std::set<std::string> ids;
    std::set<std::string> produced(defined_.begin(), defined_.end());
    for (const auto& n : g_.nodes) {
      if (!ids.insert(n.id).second) add(n.id, Violation::DuplicateName, "duplicate node id");
      for (const auto& out : n.outputs) {
        if (!produced.insert(out).second) add(n.id, Violation::DuplicateName, "tensor '" + out + "' already defined");
      }
    }
    all_tensors_ = produced;
    for (const auto& n : g_.nodes) {
      for (const auto& in : n.inputs) {
        if (!all_tensors_.count(in)) add(n.id, Violation::UndefinedInput, "input '" + in + "' is never defined");
      }
      const auto sig = op_signature(n.op);
      const int nin = static_cast<int>(n.inputs.size());
      if (nin < sig.min_inputs || (sig.max_inputs >= 0 && nin > sig.max_inputs) ||
          static_cast<int>(n.outputs.size()) != sig.outputs) {
        std::ostringstream os;
        os << op_name(n.op) << " takes " << sig.min_inputs;
        if (sig.max_inputs != sig.min_inputs) os << ".." << (sig.max_inputs < 0 ? std::string("n") : std::to_string(sig.max_inputs));
        os << " inputs and " << sig.outputs << " output, got " << nin << "/" << n.outputs.size();
        add(n.id, Violation::BadArity, os.str());
      }
      check_attrs(n);
    }
  }

  void bad_attr(const Node& n, const std::string& msg) { add(n.id, Violation::BadAttribute, msg); }

  void want_ints(const Node& n, const std::string& key, bool required, std::size_t len, std::int64_t min_value) {
    auto it = n.attrs.find(key);
    if (it == n.attrs.end()) {
      if (required) bad_attr(n, "missing int-list attribute '" + key + "'");
      return;
    }
    const auto* v = std::get_if<std::vector<std::int64_t>>(&it->second);
    if (!v) return bad_attr(n, "attribute '" + key + "' must be an int list");
    if (len && v->size() != len) return bad_attr(n, "attribute '" + key + "' must have " + std::to_string(len) + " entries");
    for (auto x : *v) {
      if (x < min_value) return bad_attr(n, "attribute '" + key + "' has out-of-range entry " + std::to_string(x));
    }
  }

  void want_int(const Node& n, const std::string& key, bool required) {
    auto it = n.attrs.find(key);
    if (it == n.attrs.end()) {
      if (required) bad_attr(n, "missing int attribute '" + key + "'");
      return;
    }
    if (!std::holds_alternative<std::int64_t>(it->second)) bad_attr(n, "attribute '" + key + "' must be an int");
  }

  void want_string(const Node& n, const std::string& key) {
    if (!n.string_attr(key)) bad_attr(n, "missing string attribute '" + key + "'");
  }

  void check_attrs(const Node& n) {
    switch (n.op) {
      case OpKind::Constant: {
        auto v = n.string_attr("value");
        if (!v) return bad_attr(n, "Constant needs a 'value' attribute naming its payload");
        if (!g_.constants.count(*v)) bad_attr(n, "Constant payload '" + *v + "' is missing");
        break;
      }
      case OpKind::Cast: {
        auto to = n.string_attr("to");
        if (!to) return bad_attr(n, "Cast needs a 'to' dtype attribute");
        try {
          parse_dtype(*to);
        } catch (const Error&) {
          bad_attr(n, "Cast target '" + *to + "' is not a dtype");
        }
        break;
      }
      case OpKind::Einsum: want_string(n, "equation"); break;
      case OpKind::Transpose: want_ints(n, "perm", true, 0, 0); break;
      case OpKind::Reshape: {
        want_ints(n, "shape", true, 0, -1);
        if (auto s = n.ints_attr("shape")) {
          if (std::count(s->begin(), s->end(), -1) > 1) bad_attr(n, "Reshape allows at most one -1");
          if (std::count(s->begin(), s->end(), 0) > 0) bad_attr(n, "Reshape target dims must be positive");
          if (s->size() > kMaxRank) bad_attr(n, "Reshape target exceeds rank 5");
        }
        break;
      }
      case OpKind::Concat: want_int(n, "axis", true); break;
      case OpKind::ReduceMax:
      case OpKind::ReduceSum:
        want_ints(n, "axes", false, 0, std::numeric_limits<std::int64_t>::min());
        want_int(n, "keepdims", false);
        break;
      case OpKind::Softmax: want_int(n, "axis", false); break;
      case OpKind::MaxPool2d:
      case OpKind::MaxPool3d: {
        const std::size_t k = n.op == OpKind::MaxPool2d ? 2 : 3;
        want_ints(n, "kernel", true, k, 1);
        want_ints(n, "stride", false, k, 1);
        want_ints(n, "pads", false, k, 0);
        break;
      }
      case OpKind::Conv2d:
        want_ints(n, "stride", false, 2, 1);
        want_ints(n, "pads", false, 2, 0);
        break;
      default: break;
    }
  }

  void check_outputs() {
    for (const auto& s : g_.outputs) {
      if (!all_tensors_.count(s.name)) {
        add(std::string(kGraphLevel), Violation::UndefinedInput, "graph output '" + s.name + "' is never produced");
      }
    }
  }

  void check_cycles() {
    auto order = g_.topological_order();
    if (order.size() == g_.nodes.size()) return;
    std::vector<bool> placed(g_.nodes.size(), false);
    for (auto i : order) placed[i] = true;
    for (std::size_t i = 0; i < g_.nodes.size(); ++i) {
      if (!placed[i]) add(g_.nodes[i].id, Violation::Cycle, "node participates in or depends on a cycle");
    }
  }

  const Graph& g_;
  std::vector<StructuralError> errors_;
  std::set<std::string> defined_;
  std::set<std::string> all_tensors_;
};

}  // namespace

std::vector<StructuralError> validate_graph(const Graph& graph) { return Validator(graph).run(); }

void require_valid(const Graph& graph) {
  auto errors = validate_graph(graph);
  if (errors.empty()) return;
  std::ostringstream os;
  os << "graph '" << graph.name << "' is malformed:";
  for (const auto& e : errors) os << " [" << violation_name(e.kind) << "@" << e.node_id << ": " << e.message << "]";
  fail(ErrorCode::InvalidGraph, os.str());
}

}  // namespace portir
