// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/surgery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "portir/einsum.hpp"
#include "portir/error.hpp"
#include "portir/io.hpp"
#include "portir/shape_inference.hpp"

namespace portir {

using nlohmann::json;

namespace {

/// Largest magnitude for which integer values, their binary32 images and
/// binary32 quotients floor identically.
constexpr double kExactIntLimit = 8388608.0;

const Node& require_node(const Graph& g, const std::string& id, OpKind op) {
  const Node* n = g.find_node(id);
  if (!n) fail(ErrorCode::WrongOpKind, "no node '" + id + "'");
  if (n->op != op) {
    fail(ErrorCode::WrongOpKind, "node '" + id + "' is " + std::string(op_name(n->op)) + ", expected " +
                                     std::string(op_name(op)));
  }
  return *n;
}

const TensorSpec& spec_of(const Graph& g, const std::string& tensor) {
  const TensorSpec* s = g.spec(tensor);
  if (!s) fail(ErrorCode::InvalidGraph, "tensor '" + tensor + "' has no inferred spec");
  return *s;
}

StaticShape static_of(const Graph& g, const std::string& tensor, const Node& n) {
  const auto& s = spec_of(g, tensor);
  if (!is_static(s.shape)) {
    fail(ErrorCode::StaticShapeRequired, "node '" + n.id + "' needs a static shape for '" + tensor + "', got " +
                                             shape_to_string(s.shape));
  }
  return to_static(s.shape);
}

/// Splices a replacement subgraph in place of one node.
class Rewriter {
 public:
  Rewriter(const Graph& g, const Node& target) : g_(g), target_(target) {
    for (const auto& in : g.inputs) used_.insert(in.name);
    for (const auto& n : g.nodes) {
      used_.insert(n.id);
      for (const auto& o : n.outputs) used_.insert(o);
    }
    for (const auto& [name, value] : g.constants) used_.insert(name);
    remove_.insert(target.id);
  }

  std::string fresh(const std::string& stem) {
    std::string base = target_.id + "_" + stem;
    std::string name = base;
    for (int k = 1; used_.contains(name); ++k) name = base + "_" + std::to_string(k);
    used_.insert(name);
    return name;
  }

  std::string emit(OpKind op, std::vector<std::string> inputs, Attributes attrs, const std::string& stem) {
    const std::string name = fresh(stem);
    added_.push_back(Node{name, op, std::move(inputs), {name}, std::move(attrs)});
    return name;
  }

  std::string cast(const std::string& tensor, DType to, const std::string& stem) {
    return emit(OpKind::Cast, {tensor}, {{"to", std::string(dtype_name(to))}}, stem);
  }

  void also_remove(const std::string& node_id) { remove_.insert(node_id); }

  /// Renames `last` to the target's output so consumers stay untouched.
  Graph finish(const std::string& last) {
    for (auto& n : added_) {
      for (auto& o : n.outputs) {
        if (o == last) o = target_.outputs[0];
      }
    }
    Graph out = g_;
    out.nodes.clear();
    out.value_specs.clear();
    for (const auto& n : g_.nodes) {
      if (n.id == target_.id) {
        out.nodes.insert(out.nodes.end(), added_.begin(), added_.end());
      } else if (!remove_.contains(n.id)) {
        out.nodes.push_back(n);
      }
    }
    require_valid(out);
    return infer_shapes(out);
  }

 private:
  const Graph& g_;
  const Node& target_;
  std::set<std::string> used_;
  std::set<std::string> remove_;
  std::vector<Node> added_;
};

Attributes perm_attr(const std::vector<std::int64_t>& perm) { return {{"perm", perm}}; }
Attributes shape_attr(const StaticShape& shape) { return {{"shape", shape}}; }

bool is_identity(const std::vector<std::int64_t>& perm) {
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] != static_cast<std::int64_t>(i)) return false;
  }
  return true;
}

const Graph& with_specs(const Graph& g, Graph& storage) {
  if (!g.value_specs.empty()) return g;
  storage = infer_shapes(g);
  return storage;
}

bool is_integer_value(double v) { return std::isfinite(v) && std::floor(v) == v; }

}  // namespace

std::optional<ValueBounds> value_bounds(const Graph& g, const std::string& tensor) {
  if (const TensorSpec* in = g.input_spec(tensor)) {
    if (in->range) return ValueBounds{in->range->lo, in->range->hi, is_integer(in->dtype)};
    if (is_integer(in->dtype) && in->dtype != DType::I64) {
      return ValueBounds{static_cast<double>(dtype_min(in->dtype)), static_cast<double>(dtype_max(in->dtype)), true};
    }
    return std::nullopt;
  }
  const Node* p = g.producer(tensor);
  if (!p) return std::nullopt;
  switch (p->op) {
    case OpKind::Constant: {
      const auto it = g.constants.find(p->string_attr("value").value_or(""));
      if (it == g.constants.end() || it->second.numel() == 0) return std::nullopt;
      const TensorValue& t = it->second;
      ValueBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), true};
      for (std::int64_t i = 0; i < t.numel(); ++i) {
        const double v = t.at(i);
        if (std::isnan(v)) return std::nullopt;
        b.lo = std::min(b.lo, v);
        b.hi = std::max(b.hi, v);
        b.integral = b.integral && is_integer_value(v);
      }
      return b;
    }
    case OpKind::Cast: {
      auto src = value_bounds(g, p->inputs[0]);
      if (!src) return std::nullopt;
      const DType to = parse_dtype(p->string_attr("to").value_or("f32"));
      if (is_integer(to)) {
        return ValueBounds{std::clamp(std::trunc(src->lo), static_cast<double>(dtype_min(to)), static_cast<double>(dtype_max(to))),
                           std::clamp(std::trunc(src->hi), static_cast<double>(dtype_min(to)), static_cast<double>(dtype_max(to))),
                           true};
      }
      if (src->integral && std::max(std::fabs(src->lo), std::fabs(src->hi)) > kExactIntLimit) return std::nullopt;
      return src;
    }
    case OpKind::Relu: {
      auto src = value_bounds(g, p->inputs[0]);
      if (!src) return ValueBounds{0.0, std::numeric_limits<double>::infinity(), false};
      return ValueBounds{std::max(src->lo, 0.0), std::max(src->hi, 0.0), src->integral};
    }
    default: return std::nullopt;
  }
}

Graph expand_mod_float(const Graph& graph, const std::string& node_id) {
  Graph storage;
  const Graph& g = with_specs(graph, storage);
  const Node& n = require_node(g, node_id, OpKind::Mod);
  const auto& a = n.inputs[0];
  const auto& b = n.inputs[1];
  if (!is_float(spec_of(g, a).dtype)) {
    fail(ErrorCode::WrongDtype, "Mod node '" + node_id + "' has integer operands; expand_mod_float needs floats");
  }
  Rewriter rw(g, n);
  const auto q = rw.emit(OpKind::Div, {a, b}, {}, "div");
  const auto f = rw.emit(OpKind::Floor, {q}, {}, "floor");
  const auto m = rw.emit(OpKind::Mul, {b, f}, {}, "mul");
  const auto r = rw.emit(OpKind::Sub, {a, m}, {}, "sub");
  return rw.finish(r);
}

Graph expand_mod_integer(const Graph& graph, const std::string& node_id) {
  Graph storage;
  const Graph& g = with_specs(graph, storage);
  const Node& n = require_node(g, node_id, OpKind::Mod);
  const auto& a = n.inputs[0];
  const auto& b = n.inputs[1];
  if (!is_integer(spec_of(g, a).dtype)) {
    fail(ErrorCode::WrongDtype, "Mod node '" + node_id + "' has float operands; expand_mod_integer needs integers");
  }
  for (const auto& t : {a, b}) {
    const auto bounds = value_bounds(g, t);
    if (!bounds) {
      fail(ErrorCode::SignUnsafe, "Mod node '" + node_id + "': operand '" + t +
                                      "' has no declared range; truncating Div differs from floor for negatives");
    }
    if (bounds->lo < 0) {
      std::ostringstream os;
      os << "Mod node '" << node_id << "': operand '" << t << "' may be negative (range [" << bounds->lo << ", "
         << bounds->hi << "])";
      fail(ErrorCode::SignUnsafe, os.str());
    }
  }
  Rewriter rw(g, n);
  const auto q = rw.emit(OpKind::Div, {a, b}, {}, "div");
  const auto m = rw.emit(OpKind::Mul, {b, q}, {}, "mul");
  const auto r = rw.emit(OpKind::Sub, {a, m}, {}, "sub");
  return rw.finish(r);
}

Graph eliminate_floor(const Graph& graph, const std::string& node_id) {
  Graph storage;
  const Graph& g = with_specs(graph, storage);
  const Node& n = require_node(g, node_id, OpKind::Floor);
  const Node* div = g.producer(n.inputs[0]);
  if (!div || div->op != OpKind::Div) {
    fail(ErrorCode::PatternMismatch, "Floor node '" + node_id + "' is not fed by a Div");
  }
  const char* roles[] = {"dividend", "divisor"};
  for (int i = 0; i < 2; ++i) {
    const auto& t = div->inputs[static_cast<std::size_t>(i)];
    const auto b = value_bounds(g, t);
    if (!b || !b->integral || b->lo < (i == 0 ? 0.0 : 1.0) || b->hi > kExactIntLimit) {
      fail(ErrorCode::PatternMismatch, std::string("Floor node '") + node_id + "': " + roles[i] + " '" + t +
                                           "' is not provably a " + (i == 0 ? "nonnegative" : "positive") +
                                           " integer within exact float range");
    }
  }
  Rewriter rw(g, n);
  auto as_i64 = [&](const std::string& t, const std::string& stem) {
    if (const Node* p = g.producer(t); p && p->op == OpKind::Cast) {
      const auto& src = spec_of(g, p->inputs[0]);
      if (src.dtype == DType::I64) return p->inputs[0];
      if (is_integer(src.dtype)) return rw.cast(p->inputs[0], DType::I64, stem);
    }
    return rw.cast(t, DType::I64, stem);
  };
  const auto xi = as_i64(div->inputs[0], "lhs_i64");
  const auto yi = as_i64(div->inputs[1], "rhs_i64");
  const auto q = rw.emit(OpKind::Div, {xi, yi}, {}, "div_i64");
  const auto r = rw.cast(q, spec_of(g, n.outputs[0]).dtype, "cast");
  const bool div_shared = g.consumers(div->outputs[0]).size() > 1 ||
                          std::any_of(g.outputs.begin(), g.outputs.end(), [&](const TensorSpec& s) {
                            return s.name == div->outputs[0];
                          });
  if (!div_shared) rw.also_remove(div->id);
  return rw.finish(r);
}

Graph lower_einsum(const Graph& graph, const std::string& node_id) {
  Graph storage;
  const Graph& g = with_specs(graph, storage);
  const Node& n = require_node(g, node_id, OpKind::Einsum);
  if (n.inputs.size() != 2) {
    fail(ErrorCode::UnsupportedEquation, "Einsum node '" + node_id + "' has " + std::to_string(n.inputs.size()) +
                                             " operands; only two are lowered");
  }
  const auto eq = parse_einsum(*n.string_attr("equation"), 2);
  const std::string& la = eq.operands[0];
  const std::string& lb = eq.operands[1];
  const std::string& lo = eq.output;
  for (const auto* labels : {&la, &lb}) {
    for (char c : *labels) {
      if (std::count(labels->begin(), labels->end(), c) > 1) {
        fail(ErrorCode::UnsupportedEquation, "Einsum node '" + node_id + "': label '" + std::string(1, c) +
                                                 "' repeats within one operand");
      }
    }
  }
  auto in = [](const std::string& s, char c) { return s.find(c) != std::string::npos; };
  std::string batch, free_l, free_r, contracted;
  for (char c : lo) {
    if (in(la, c) && in(lb, c)) {
      batch += c;
    } else if (in(la, c)) {
      free_l += c;
    } else {
      free_r += c;
    }
  }
  for (char c : la) {
    if (in(lb, c) && !in(lo, c)) contracted += c;
    if (!in(lb, c) && !in(lo, c)) {
      fail(ErrorCode::UnsupportedEquation, "Einsum node '" + node_id + "': label '" + std::string(1, c) +
                                               "' is summed within one operand");
    }
  }
  for (char c : lb) {
    if (!in(la, c) && !in(lo, c)) {
      fail(ErrorCode::UnsupportedEquation, "Einsum node '" + node_id + "': label '" + std::string(1, c) +
                                               "' is summed within one operand");
    }
  }

  const StaticShape sa = static_of(g, n.inputs[0], n);
  const StaticShape sb = static_of(g, n.inputs[1], n);
  auto extent = [&](char c) { return in(la, c) ? sa[la.find(c)] : sb[lb.find(c)]; };
  auto product = [&](const std::string& labels) {
    std::int64_t p = 1;
    for (char c : labels) p *= extent(c);
    return p;
  };
  auto perm_for = [](const std::string& from, const std::string& to) {
    std::vector<std::int64_t> perm;
    for (char c : to) perm.push_back(static_cast<std::int64_t>(from.find(c)));
    return perm;
  };

  Rewriter rw(g, n);
  auto arrange = [&](const std::string& tensor, const std::string& labels, const std::string& order,
                     const StaticShape& shape3, const StaticShape& current, const std::string& stem) {
    std::string t = tensor;
    const auto perm = perm_for(labels, order);
    if (!is_identity(perm)) t = rw.emit(OpKind::Transpose, {t}, perm_attr(perm), stem + "_t");
    StaticShape permuted;
    for (auto p : perm) permuted.push_back(current[static_cast<std::size_t>(p)]);
    if (permuted != shape3) t = rw.emit(OpKind::Reshape, {t}, shape_attr(shape3), stem + "_r");
    return t;
  };
  const std::int64_t B = product(batch), M = product(free_l), K = product(contracted), N = product(free_r);
  const auto a3 = arrange(n.inputs[0], la, batch + free_l + contracted, {B, M, K}, sa, "lhs");
  const auto b3 = arrange(n.inputs[1], lb, batch + contracted + free_r, {B, K, N}, sb, "rhs");
  std::string t = rw.emit(OpKind::MatMul, {a3, b3}, {}, "matmul");

  const std::string grouped = batch + free_l + free_r;
  StaticShape grouped_shape;
  for (char c : grouped) grouped_shape.push_back(extent(c));
  if (grouped_shape != StaticShape{B, M, N}) t = rw.emit(OpKind::Reshape, {t}, shape_attr(grouped_shape), "out_r");
  const auto perm = perm_for(grouped, lo);
  if (!is_identity(perm)) t = rw.emit(OpKind::Transpose, {t}, perm_attr(perm), "out_t");
  return rw.finish(t);
}

Graph decompose_maxpool3d(const Graph& graph, const std::string& node_id) {
  Graph storage;
  const Graph& g = with_specs(graph, storage);
  const Node& n = require_node(g, node_id, OpKind::MaxPool3d);
  const auto& xs = spec_of(g, n.inputs[0]);
  if (xs.shape.size() != 5) {
    fail(ErrorCode::BadRank, "MaxPool3d node '" + node_id + "' needs a rank-5 NCDHW input, got rank " +
                                 std::to_string(xs.shape.size()));
  }
  const auto kernel = *n.ints_attr("kernel");
  const auto stride = n.ints_attr("stride").value_or(kernel);
  const auto pads = n.ints_attr("pads").value_or(std::vector<std::int64_t>(3, 0));
  if (std::any_of(pads.begin(), pads.end(), [](auto p) { return p != 0; })) {
    fail(ErrorCode::UnsupportedPadding, "MaxPool3d node '" + node_id + "' has nonzero padding");
  }
  const StaticShape s = static_of(g, n.inputs[0], n);
  const std::int64_t N = s[0], C = s[1], D = s[2], H = s[3], W = s[4];
  const std::int64_t Ho = window_extent(H, kernel[1], stride[1], 0);
  const std::int64_t Wo = window_extent(W, kernel[2], stride[2], 0);
  const std::int64_t Do = window_extent(D, kernel[0], stride[0], 0);

  Rewriter rw(g, n);
  auto pool = [&](const std::string& t, std::int64_t kh, std::int64_t kw, std::int64_t sh, std::int64_t sw,
                  const std::string& stem) {
    return rw.emit(OpKind::MaxPool2d, {t},
                   {{"kernel", std::vector<std::int64_t>{kh, kw}},
                    {"stride", std::vector<std::int64_t>{sh, sw}},
                    {"pads", std::vector<std::int64_t>{0, 0}}},
                   stem);
  };
  std::string t = rw.emit(OpKind::Reshape, {n.inputs[0]}, shape_attr({N, C * D, H, W}), "fold_depth");
  t = pool(t, kernel[1], kernel[2], stride[1], stride[2], "pool_hw");
  t = rw.emit(OpKind::Reshape, {t}, shape_attr({N, C, D, Ho, Wo}), "unfold_depth");
  t = rw.emit(OpKind::Transpose, {t}, perm_attr({0, 1, 3, 4, 2}), "depth_last");
  t = rw.emit(OpKind::Reshape, {t}, shape_attr({N, C * Ho * Wo, D, 1}), "fold_hw");
  t = pool(t, kernel[0], 1, stride[0], 1, "pool_d");
  t = rw.emit(OpKind::Reshape, {t}, shape_attr({N, C, Ho, Wo, Do}), "unfold_hw");
  t = rw.emit(OpKind::Transpose, {t}, perm_attr({0, 1, 4, 2, 3}), "depth_back");
  return rw.finish(t);
}

std::vector<std::string> graph_symbols(const Graph& graph) {
  std::set<std::string> names;
  for (const auto* list : {&graph.inputs, &graph.outputs}) {
    for (const auto& s : *list) {
      for (const auto& d : s.shape) {
        if (!d.is_static()) names.insert(d.name());
      }
    }
  }
  return {names.begin(), names.end()};
}

namespace {

Shape substitute(const Shape& shape, const Bindings& bindings) {
  Shape out = shape;
  for (auto& d : out) {
    if (d.is_static()) continue;
    if (auto it = bindings.find(d.name()); it != bindings.end()) d = Dim::fixed(it->second);
  }
  return out;
}

}  // namespace

Graph bind_shapes(const Graph& graph, const Bindings& bindings) {
  std::vector<std::string> missing;
  for (const auto& sym : graph_symbols(graph)) {
    auto it = bindings.find(sym);
    if (it == bindings.end()) {
      missing.push_back(sym);
    } else if (it->second < 1) {
      fail(ErrorCode::ConflictingBinding, "symbol '" + sym + "' bound to non-positive " + std::to_string(it->second));
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    fail(ErrorCode::UnboundSymbol, "no binding for " + list);
  }
  Graph out = graph;
  out.value_specs.clear();
  for (auto* list : {&out.inputs, &out.outputs}) {
    for (auto& s : *list) s.shape = substitute(s.shape, bindings);
  }
  try {
    return infer_shapes(out);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ShapeMismatch) fail(ErrorCode::ConflictingBinding, e.detail());
    throw;
  }
}

bool RewritePass::matches(const Diagnostic& d) const {
  const auto sig = d.signature();
  return std::any_of(repairs.begin(), repairs.end(), [&](const std::string& p) { return signature_matches(p, sig); });
}

bool RewritePass::applicable(const Graph& graph, const Diagnostic& d, const PassContext& ctx) const {
  try {
    transform(graph, d, ctx);
    return true;
  } catch (const Error&) {
    return false;
  }
}

const std::vector<RewritePass>& pass_registry() {
  static const std::vector<RewritePass> registry = [] {
    auto node_pass = [](Graph (*fn)(const Graph&, const std::string&)) {
      return [fn](const Graph& g, const Diagnostic& d, const PassContext&) { return fn(g, d.node_id); };
    };
    std::vector<RewritePass> r;
    r.push_back({"expand_mod_float", {"UnsupportedOp/Mod/*"}, node_pass(&expand_mod_float)});
    r.push_back({"expand_mod_integer", {"UnsupportedOp/Mod/int"}, node_pass(&expand_mod_integer)});
    r.push_back({"eliminate_floor", {"UnsupportedOp/Floor/float"}, node_pass(&eliminate_floor)});
    r.push_back({"lower_einsum", {"UnsupportedOp/Einsum/*"}, node_pass(&lower_einsum)});
    r.push_back({"decompose_maxpool3d", {"UnsupportedOp/MaxPool3d/*"}, node_pass(&decompose_maxpool3d)});
    r.push_back({"bind_shapes", {"DynamicShape/*/*"},
                 [](const Graph& g, const Diagnostic&, const PassContext& ctx) { return bind_shapes(g, ctx.bindings); }});
    return r;
  }();
  return registry;
}

const RewritePass* find_pass(std::string_view id) {
  for (const auto& p : pass_registry()) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

json receipt_to_json(const PassReceipt& r, bool with_timestamp) {
  json j{{"pass_id", r.pass_id}, {"signature", r.signature}, {"target", r.target}, {"removed", r.removed}, {"added", r.added}};
  if (with_timestamp) j["timestamp"] = r.timestamp;
  return j;
}

PassReceipt receipt_from_json(const json& doc) {
  PassReceipt r;
  r.pass_id = doc.at("pass_id").get<std::string>();
  r.signature = doc.at("signature").get<std::string>();
  r.target = doc.at("target").get<std::string>();
  r.removed = doc.at("removed").get<std::vector<std::string>>();
  r.added = doc.at("added").get<std::vector<std::string>>();
  r.timestamp = doc.value("timestamp", "");
  return r;
}

AppliedPass apply_pass(const Graph& graph, const RewritePass& pass, const Diagnostic& d, const PassContext& ctx) {
  AppliedPass out{pass.transform(graph, d, ctx), {}};
  out.receipt.pass_id = pass.id;
  out.receipt.signature = d.signature();
  out.receipt.target = d.node_id;
  for (const auto& n : graph.nodes) {
    if (!out.graph.has_node(n.id)) out.receipt.removed.push_back(n.id);
  }
  for (const auto& n : out.graph.nodes) {
    if (!graph.has_node(n.id)) out.receipt.added.push_back(n.id);
  }
  out.receipt.timestamp = utc_timestamp();
  return out;
}

IoSignature io_signature(const Graph& graph, const Bindings& bindings) {
  IoSignature sig;
  auto strip = [&](const TensorSpec& s) { return TensorSpec{s.name, s.dtype, substitute(s.shape, bindings), std::nullopt}; };
  for (const auto& s : graph.inputs) sig.inputs.push_back(strip(s));
  for (const auto& s : graph.outputs) sig.outputs.push_back(strip(s));
  return sig;
}

json io_signature_to_json(const IoSignature& sig) {
  auto list = [](const std::vector<TensorSpec>& specs) {
    json arr = json::array();
    for (const auto& s : specs) {
      json shape = json::array();
      for (const auto& d : s.shape) {
        if (d.is_static()) {
          shape.push_back(d.size());
        } else {
          shape.push_back(d.name());
        }
      }
      arr.push_back({{"name", s.name}, {"dtype", std::string(dtype_name(s.dtype))}, {"shape", shape}});
    }
    return arr;
  };
  return json{{"inputs", list(sig.inputs)}, {"outputs", list(sig.outputs)}};
}

std::string describe_difference(const IoSignature& a, const IoSignature& b) {
  auto side = [](const char* what, const std::vector<TensorSpec>& x, const std::vector<TensorSpec>& y) -> std::string {
    if (x.size() != y.size()) {
      return std::string(what) + " count " + std::to_string(x.size()) + " vs " + std::to_string(y.size());
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].name != y[i].name) return std::string(what) + " " + std::to_string(i) + " name '" + x[i].name + "' vs '" + y[i].name + "'";
      if (x[i].dtype != y[i].dtype) return std::string(what) + " '" + x[i].name + "' dtype differs";
      if (!(x[i].shape == y[i].shape)) {
        return std::string(what) + " '" + x[i].name + "' shape " + shape_to_string(x[i].shape) + " vs " + shape_to_string(y[i].shape);
      }
    }
    return {};
  };
  auto d = side("input", a.inputs, b.inputs);
  return d.empty() ? side("output", a.outputs, b.outputs) : d;
}

EquivalenceReport verify_equivalence(const Graph& pre, const Graph& post, const EquivalenceOptions& opts) {
  const auto spre = io_signature(pre, opts.bindings);
  const auto spost = io_signature(post, opts.bindings);
  if (!(spre == spost)) fail(ErrorCode::SignatureMismatch, describe_difference(spre, spost));
  const Graph a = graph_symbols(pre).empty() ? pre : bind_shapes(pre, opts.bindings);
  const Graph b = graph_symbols(post).empty() ? post : bind_shapes(post, opts.bindings);
  const Session sa(a);
  const Session sb(b);
  const Tolerance exact{0.0, 0.0, opts.tol.denom_floor};

  EquivalenceReport report;
  auto run = [](const Session& s, const TensorList& feeds, std::optional<TensorList>& out, std::string& err) {
    try {
      out = s.run(feeds).outputs;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NumericError) throw;
      err = e.detail();
    }
  };
  for (int t = 0; t < opts.trials; ++t) {
    const auto feeds = generate_feeds(sa.graph(), opts.seed, static_cast<std::uint64_t>(t));
    std::optional<TensorList> ra, rb;
    std::string ea, eb;
    run(sa, feeds, ra, ea);
    run(sb, feeds, rb, eb);
    ++report.trials;
    bool ok = true;
    std::string why;
    if (!ra && !rb) {
      ok = true;
    } else if (!ra || !rb) {
      ok = false;
      why = "NumericError on one side only: " + (ra ? eb : ea);
    } else {
      for (std::size_t i = 0; i < ra->size(); ++i) {
        const auto& [name, va] = (*ra)[i];
        const bool integral = is_integer(va.dtype());
        const auto r = compare({(*rb)[i]}, {(*ra)[i]}, integral ? exact : opts.tol);
        report.max_abs = std::max(report.max_abs, r.max_abs());
        report.max_rel = std::max(report.max_rel, r.max_rel());
        if (!r.pass && ok) {
          ok = false;
          std::ostringstream os;
          os << "output '" << name << "' differs (max_abs " << r.max_abs() << ", max_rel " << r.max_rel() << ")";
          if (!r.outputs.empty() && !r.outputs[0].structural.empty()) os << ": " << r.outputs[0].structural;
          why = os.str();
        }
      }
    }
    if (ok) {
      ++report.agreeing;
    } else if (report.pass) {
      report.pass = false;
      report.first_failure = "trial " + std::to_string(t) + ": " + why;
    }
  }
  return report;
}

std::vector<RepairPlan> plan_repairs(const std::vector<Diagnostic>& diags, const KnowledgeBase& kb,
                                     const std::vector<RewritePass>& registry) {
  auto known = [&](const std::string& id) {
    return std::any_of(registry.begin(), registry.end(), [&](const RewritePass& p) { return p.id == id; });
  };
  std::vector<RepairPlan> plans;
  for (const auto& d : diags) {
    RepairPlan plan{d, {}};
    auto add = [&](const std::string& id) {
      if (known(id) && std::find(plan.candidates.begin(), plan.candidates.end(), id) == plan.candidates.end()) {
        plan.candidates.push_back(id);
      }
    };
    const auto entries = kb.entries(d.signature());
    for (const auto& e : entries) {
      if (e.successes > 0) add(e.pass_id);
    }
    for (const auto& p : registry) {
      if (p.matches(d)) add(p.id);
    }
    for (const auto& e : entries) add(e.pass_id);
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace portir
