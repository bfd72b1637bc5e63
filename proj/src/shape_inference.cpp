// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/shape_inference.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "portir/einsum.hpp"
#include "portir/error.hpp"

namespace portir {

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const Dim* da = i < rank - a.size() ? nullptr : &a[i - (rank - a.size())];
    const Dim* db = i < rank - b.size() ? nullptr : &b[i - (rank - b.size())];
    if (!da) {
      out[i] = *db;
    } else if (!db) {
      out[i] = *da;
    } else if (*da == *db) {
      out[i] = *da;
    } else if (da->is_static() && da->size() == 1) {
      out[i] = *db;
    } else if (db->is_static() && db->size() == 1) {
      out[i] = *da;
    } else {
      fail(ErrorCode::ShapeMismatch, "cannot broadcast " + shape_to_string(a) + " with " + shape_to_string(b));
    }
  }
  return out;
}

std::size_t normalize_axis(std::int64_t axis, std::size_t rank) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < -r || axis >= r) fail(ErrorCode::BadAttribute, "axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  return static_cast<std::size_t>(axis < 0 ? axis + r : axis);
}

std::int64_t window_extent(std::int64_t in, std::int64_t kernel, std::int64_t stride, std::int64_t pad) {
  const std::int64_t span = in + 2 * pad - kernel;
  if (span < 0) {
    fail(ErrorCode::ShapeMismatch, "window " + std::to_string(kernel) + " larger than padded extent " + std::to_string(in + 2 * pad));
  }
  return span / stride + 1;
}

namespace {

std::string where(const Node& n) { return std::string(op_name(n.op)) + " node '" + n.id + "': "; }

void require_float(const Node& n, const TensorSpec& s) {
  if (!is_float(s.dtype)) fail(ErrorCode::TypeMismatch, where(n) + "requires a float operand, got " + std::string(dtype_name(s.dtype)));
}

void require_same_dtype(const Node& n, const std::vector<const TensorSpec*>& in) {
  for (const auto* s : in) {
    if (s->dtype != in[0]->dtype) {
      fail(ErrorCode::TypeMismatch, where(n) + "operand dtypes differ (" + std::string(dtype_name(in[0]->dtype)) + " vs " +
                                        std::string(dtype_name(s->dtype)) + ")");
    }
  }
}

std::int64_t static_dim(const Node& n, const Dim& d, const char* what) {
  if (!d.is_static()) fail(ErrorCode::ShapeMismatch, where(n) + what + " must be static, got '" + d.name() + "'");
  return d.size();
}

Shape infer_pool(const Node& n, const TensorSpec& x, std::size_t spatial) {
  if (x.shape.size() != spatial + 2) {
    fail(ErrorCode::ShapeMismatch, where(n) + "expects rank " + std::to_string(spatial + 2) + " input, got " + shape_to_string(x.shape));
  }
  const auto kernel = *n.ints_attr("kernel");
  const auto stride = n.ints_attr("stride").value_or(kernel);
  const auto pads = n.ints_attr("pads").value_or(std::vector<std::int64_t>(spatial, 0));
  Shape out = x.shape;
  for (std::size_t i = 0; i < spatial; ++i) {
    out[2 + i] = Dim::fixed(window_extent(static_dim(n, x.shape[2 + i], "spatial dim"), kernel[i], stride[i], pads[i]));
  }
  return out;
}

Shape infer_matmul(const Node& n, const TensorSpec& a, const TensorSpec& b) {
  if (a.shape.size() < 2 || b.shape.size() < 2) fail(ErrorCode::ShapeMismatch, where(n) + "operands must have rank >= 2");
  const auto& k1 = a.shape[a.shape.size() - 1];
  const auto& k2 = b.shape[b.shape.size() - 2];
  if (!(k1 == k2)) {
    fail(ErrorCode::ShapeMismatch, where(n) + "contraction dims differ: " + shape_to_string(a.shape) + " x " + shape_to_string(b.shape));
  }
  Shape ba(a.shape.begin(), a.shape.end() - 2);
  Shape bb(b.shape.begin(), b.shape.end() - 2);
  Shape out = broadcast_shapes(ba, bb);
  out.push_back(a.shape[a.shape.size() - 2]);
  out.push_back(b.shape.back());
  return out;
}

Shape infer_einsum(const Node& n, const std::vector<const TensorSpec*>& in) {
  const auto eq = parse_einsum(*n.string_attr("equation"), in.size());
  std::map<char, Dim> extent;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto& labels = eq.operands[i];
    if (labels.size() != in[i]->shape.size()) {
      fail(ErrorCode::UnsupportedEquation, where(n) + "operand " + std::to_string(i) + " has rank " +
                                               std::to_string(in[i]->shape.size()) + " but labels '" + labels + "'");
    }
    for (std::size_t k = 0; k < labels.size(); ++k) {
      auto [it, inserted] = extent.emplace(labels[k], in[i]->shape[k]);
      if (!inserted && !(it->second == in[i]->shape[k])) {
        fail(ErrorCode::ShapeMismatch, where(n) + "label '" + std::string(1, labels[k]) + "' has conflicting extents");
      }
    }
  }
  Shape out;
  for (char c : eq.output) out.push_back(extent.at(c));
  return out;
}

Shape infer_reshape(const Node& n, const TensorSpec& x) {
  const auto target = *n.ints_attr("shape");
  const bool wildcard = std::find(target.begin(), target.end(), -1) != target.end();
  if (!is_static(x.shape)) {
    if (wildcard) fail(ErrorCode::UnresolvableReshape, where(n) + "-1 with symbolic input " + shape_to_string(x.shape));
    return make_shape(target);
  }
  const std::int64_t total = element_count(to_static(x.shape));
  std::int64_t known = 1;
  for (auto d : target) {
    if (d != -1) known *= d;
  }
  StaticShape resolved = target;
  if (wildcard) {
    if (known == 0 || total % known != 0) {
      fail(ErrorCode::ShapeMismatch, where(n) + "cannot reshape " + shape_to_string(x.shape) + " to " + shape_to_string(target));
    }
    *std::find(resolved.begin(), resolved.end(), -1) = total / known;
  } else if (known != total) {
    fail(ErrorCode::ShapeMismatch, where(n) + "cannot reshape " + shape_to_string(x.shape) + " to " + shape_to_string(target));
  }
  return make_shape(resolved);
}

Shape infer_concat(const Node& n, const std::vector<const TensorSpec*>& in) {
  const std::size_t rank = in[0]->shape.size();
  const std::size_t axis = normalize_axis(*n.int_attr("axis"), rank);
  std::int64_t total = 0;
  for (const auto* s : in) {
    if (s->shape.size() != rank) fail(ErrorCode::ShapeMismatch, where(n) + "operand ranks differ");
    for (std::size_t d = 0; d < rank; ++d) {
      if (d == axis) continue;
      if (!(s->shape[d] == in[0]->shape[d])) fail(ErrorCode::ShapeMismatch, where(n) + "non-axis dims differ");
    }
    total += static_dim(n, s->shape[axis], "concat axis dim");
  }
  Shape out = in[0]->shape;
  out[axis] = Dim::fixed(total);
  return out;
}

Shape infer_reduce(const Node& n, const TensorSpec& x) {
  const std::size_t rank = x.shape.size();
  std::set<std::size_t> axes;
  if (auto a = n.ints_attr("axes")) {
    for (auto v : *a) axes.insert(normalize_axis(v, rank));
  } else {
    for (std::size_t i = 0; i < rank; ++i) axes.insert(i);
  }
  const bool keep = n.int_attr("keepdims").value_or(1) != 0;
  Shape out;
  for (std::size_t i = 0; i < rank; ++i) {
    if (!axes.count(i)) {
      out.push_back(x.shape[i]);
    } else if (keep) {
      out.push_back(Dim::fixed(1));
    }
  }
  return out;
}

Shape infer_conv(const Node& n, const std::vector<const TensorSpec*>& in) {
  const auto& x = *in[0];
  const auto& w = *in[1];
  if (x.shape.size() != 4 || w.shape.size() != 4) fail(ErrorCode::ShapeMismatch, where(n) + "expects NCHW input and OIHW weight");
  if (!(x.shape[1] == w.shape[1])) fail(ErrorCode::ShapeMismatch, where(n) + "input channels differ from weight channels");
  const auto stride = n.ints_attr("stride").value_or(std::vector<std::int64_t>{1, 1});
  const auto pads = n.ints_attr("pads").value_or(std::vector<std::int64_t>{0, 0});
  if (in.size() == 3) {
    const auto& b = *in[2];
    if (b.shape.size() != 1 || !(b.shape[0] == w.shape[0])) fail(ErrorCode::ShapeMismatch, where(n) + "bias must be [out_channels]");
  }
  Shape out{x.shape[0], w.shape[0], Dim(), Dim()};
  for (std::size_t i = 0; i < 2; ++i) {
    out[2 + i] = Dim::fixed(window_extent(static_dim(n, x.shape[2 + i], "spatial dim"), static_dim(n, w.shape[2 + i], "kernel dim"),
                                          stride[i], pads[i]));
  }
  return out;
}

Shape infer_transpose(const Node& n, const TensorSpec& x) {
  const auto perm = *n.ints_attr("perm");
  if (perm.size() != x.shape.size()) fail(ErrorCode::BadAttribute, where(n) + "perm length differs from input rank");
  std::vector<bool> seen(perm.size(), false);
  Shape out;
  for (auto p : perm) {
    if (p < 0 || p >= static_cast<std::int64_t>(perm.size()) || seen[static_cast<std::size_t>(p)]) {
      fail(ErrorCode::BadAttribute, where(n) + "perm is not a permutation");
    }
    seen[static_cast<std::size_t>(p)] = true;
    out.push_back(x.shape[static_cast<std::size_t>(p)]);
  }
  return out;
}

TensorSpec infer_node(const Graph& g, const Node& n, const std::vector<const TensorSpec*>& in) {
  TensorSpec out;
  out.name = n.outputs.at(0);
  switch (n.op) {
    case OpKind::Constant: {
      const auto& t = g.constants.at(*n.string_attr("value"));
      out.dtype = t.dtype();
      out.shape = make_shape(t.shape());
      break;
    }
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
    case OpKind::Mod:
      require_same_dtype(n, in);
      out.dtype = in[0]->dtype;
      out.shape = broadcast_shapes(in[0]->shape, in[1]->shape);
      break;
    case OpKind::Floor:
    case OpKind::Exp:
    case OpKind::Softmax:
      require_float(n, *in[0]);
      out.dtype = in[0]->dtype;
      out.shape = in[0]->shape;
      if (n.op == OpKind::Softmax) normalize_axis(n.int_attr("axis").value_or(-1), in[0]->shape.size());
      break;
    case OpKind::Neg:
    case OpKind::Relu:
      out.dtype = in[0]->dtype;
      out.shape = in[0]->shape;
      break;
    case OpKind::Cast:
      out.dtype = parse_dtype(*n.string_attr("to"));
      out.shape = in[0]->shape;
      break;
    case OpKind::MatMul:
      require_same_dtype(n, in);
      out.dtype = in[0]->dtype;
      out.shape = infer_matmul(n, *in[0], *in[1]);
      break;
    case OpKind::Einsum:
      require_same_dtype(n, in);
      out.dtype = in[0]->dtype;
      out.shape = infer_einsum(n, in);
      break;
    case OpKind::Transpose:
      out.dtype = in[0]->dtype;
      out.shape = infer_transpose(n, *in[0]);
      break;
    case OpKind::Reshape:
      out.dtype = in[0]->dtype;
      out.shape = infer_reshape(n, *in[0]);
      break;
    case OpKind::Concat:
      require_same_dtype(n, in);
      out.dtype = in[0]->dtype;
      out.shape = infer_concat(n, in);
      break;
    case OpKind::ReduceMax:
    case OpKind::ReduceSum:
      out.dtype = in[0]->dtype;
      out.shape = infer_reduce(n, *in[0]);
      break;
    case OpKind::MaxPool2d:
      out.dtype = in[0]->dtype;
      out.shape = infer_pool(n, *in[0], 2);
      break;
    case OpKind::MaxPool3d:
      out.dtype = in[0]->dtype;
      out.shape = infer_pool(n, *in[0], 3);
      break;
    case OpKind::Conv2d:
      require_float(n, *in[0]);
      require_same_dtype(n, in);
      out.dtype = in[0]->dtype;
      out.shape = infer_conv(n, in);
      break;
  }
  if (out.shape.size() > kMaxRank) fail(ErrorCode::ShapeMismatch, where(n) + "result exceeds rank 5");
  return out;
}

}  // namespace

Graph infer_shapes(const Graph& graph) {
  require_valid(graph);
  Graph g = graph;
  g.value_specs.clear();
  for (const auto& s : g.inputs) g.value_specs[s.name] = s;
  for (auto idx : g.topological_order()) {
    const Node& n = g.nodes[idx];
    std::vector<const TensorSpec*> in;
    in.reserve(n.inputs.size());
    for (const auto& name : n.inputs) in.push_back(&g.value_specs.at(name));
    g.value_specs[n.outputs[0]] = infer_node(g, n, in);
  }
  for (const auto& declared : g.outputs) {
    const auto& inferred = g.value_specs.at(declared.name);
    if (declared.dtype != inferred.dtype || !(declared.shape == inferred.shape)) {
      fail(ErrorCode::ShapeMismatch, "graph output '" + declared.name + "' declared " + std::string(dtype_name(declared.dtype)) +
                                         shape_to_string(declared.shape) + " but inferred " + std::string(dtype_name(inferred.dtype)) +
                                         shape_to_string(inferred.shape));
    }
  }
  return g;
}

}  // namespace portir
