// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. Float elementwise ops compute in binary32; MatMul,
// Einsum, Conv2d, ReduceSum and Softmax accumulate in binary64 and round once.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "portir/einsum.hpp"
#include "portir/error.hpp"
#include "portir/half.hpp"
#include "portir/interpreter.hpp"
#include "portir/shape_inference.hpp"

namespace portir {

namespace {

using Strides = std::vector<std::int64_t>;

Strides row_strides(const StaticShape& s) {
  Strides st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

/// Strides of `in` laid against the (right-aligned) broadcast shape `out`.
Strides broadcast_strides(const StaticShape& in, const StaticShape& out) {
  Strides st(out.size(), 0);
  const auto rs = row_strides(in);
  const std::size_t off = out.size() - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) st[off + i] = in[i] == 1 ? 0 : rs[i];
  return st;
}

/// Visits every index of `shape` in row-major order, tracking one offset per
/// stride vector.
template <std::size_t K, typename F>
void strided_loop(const StaticShape& shape, const std::array<const Strides*, K>& strides, F&& f) {
  const std::int64_t n = element_count(shape);
  const std::size_t rank = shape.size();
  std::vector<std::int64_t> idx(rank, 0);
  std::array<std::int64_t, K> off{};
  for (std::int64_t i = 0; i < n; ++i) {
    f(i, off);
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < shape[d]) {
        for (std::size_t k = 0; k < K; ++k) off[k] += (*strides[k])[d];
        break;
      }
      for (std::size_t k = 0; k < K; ++k) off[k] -= (*strides[k])[d] * (shape[d] - 1);
      idx[d] = 0;
    }
  }
}

std::int64_t saturate(std::int64_t v, DType dtype) { return std::clamp(v, dtype_min(dtype), dtype_max(dtype)); }

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

void finish(TensorValue& t) {
  if (t.dtype() == DType::F16) {
    for (auto& v : t.floats()) v = f16_bits_to_f32(f32_to_f16_bits(v));
  } else if (is_integer(t.dtype()) && t.dtype() != DType::I64) {
    for (auto& v : t.ints()) v = saturate(v, t.dtype());
  }
}

std::int64_t int_div(std::int64_t a, std::int64_t b, const Node& n) {
  if (b == 0) fail(ErrorCode::NumericError, "integer division by zero in node '" + n.id + "'");
  if (a == std::numeric_limits<std::int64_t>::min() && b == -1) fail(ErrorCode::NumericError, "integer division overflow in node '" + n.id + "'");
  return a / b;
}

std::int64_t int_mod(std::int64_t a, std::int64_t b, const Node& n) {
  if (b == 0) fail(ErrorCode::NumericError, "integer modulo by zero in node '" + n.id + "'");
  if (b == -1) return 0;
  return a % b;
}

float float_mod(float a, float b) {
  const float q = a / b;
  const float f = std::floor(q);
  const float m = b * f;
  return a - m;
}

TensorValue binary(const Node& n, const TensorValue& a, const TensorValue& b, const StaticShape& out_shape) {
  TensorValue out(a.dtype(), out_shape);
  const auto sa = broadcast_strides(a.shape(), out_shape);
  const auto sb = broadcast_strides(b.shape(), out_shape);
  if (is_float(a.dtype())) {
    auto x = a.floats();
    auto y = b.floats();
    auto o = out.floats();
    strided_loop<2>(out_shape, {&sa, &sb}, [&](std::int64_t i, const auto& off) {
      const float p = x[off[0]];
      const float q = y[off[1]];
      float r = 0.0f;
      switch (n.op) {
        case OpKind::Add: r = p + q; break;
        case OpKind::Sub: r = p - q; break;
        case OpKind::Mul: r = p * q; break;
        case OpKind::Div: r = p / q; break;
        case OpKind::Mod: r = float_mod(p, q); break;
        default: break;
      }
      o[i] = r;
    });
  } else {
    auto x = a.ints();
    auto y = b.ints();
    auto o = out.ints();
    strided_loop<2>(out_shape, {&sa, &sb}, [&](std::int64_t i, const auto& off) {
      const std::int64_t p = x[off[0]];
      const std::int64_t q = y[off[1]];
      std::int64_t r = 0;
      switch (n.op) {
        case OpKind::Add: r = wrap_add(p, q); break;
        case OpKind::Sub: r = wrap_sub(p, q); break;
        case OpKind::Mul: r = wrap_mul(p, q); break;
        case OpKind::Div: r = int_div(p, q, n); break;
        case OpKind::Mod: r = int_mod(p, q, n); break;
        default: break;
      }
      o[i] = r;
    });
  }
  return out;
}

TensorValue unary(const Node& n, const TensorValue& a) {
  TensorValue out = a;
  if (is_float(a.dtype())) {
    for (auto& v : out.floats()) {
      switch (n.op) {
        case OpKind::Floor: v = std::floor(v); break;
        case OpKind::Neg: v = -v; break;
        case OpKind::Relu: v = std::max(v, 0.0f); break;
        case OpKind::Exp: v = std::exp(v); break;
        default: break;
      }
    }
  } else {
    for (auto& v : out.ints()) {
      if (n.op == OpKind::Neg) v = wrap_sub(0, v);
      if (n.op == OpKind::Relu) v = std::max<std::int64_t>(v, 0);
    }
  }
  return out;
}

std::int64_t float_to_int(float v, DType to) {
  if (std::isnan(v)) return 0;
  const double t = std::trunc(static_cast<double>(v));
  if (t <= static_cast<double>(dtype_min(to))) return dtype_min(to);
  if (t >= static_cast<double>(dtype_max(to))) return dtype_max(to);
  return static_cast<std::int64_t>(t);
}

TensorValue cast(const TensorValue& a, DType to) {
  TensorValue out(to, a.shape());
  const auto n = static_cast<std::size_t>(a.numel());
  if (is_float(a.dtype()) && is_float(to)) {
    std::copy(a.floats().begin(), a.floats().end(), out.floats().begin());
  } else if (is_float(a.dtype())) {
    for (std::size_t i = 0; i < n; ++i) out.ints()[i] = float_to_int(a.floats()[i], to);
  } else if (is_float(to)) {
    for (std::size_t i = 0; i < n; ++i) out.floats()[i] = static_cast<float>(a.ints()[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) out.ints()[i] = saturate(a.ints()[i], to);
  }
  return out;
}

TensorValue matmul(const TensorValue& a, const TensorValue& b, const StaticShape& out_shape) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  const std::int64_t m = as[as.size() - 2];
  const std::int64_t k = as.back();
  const std::int64_t nn = bs.back();
  StaticShape batch(out_shape.begin(), out_shape.end() - 2);
  StaticShape abatch(as.begin(), as.end() - 2);
  StaticShape bbatch(bs.begin(), bs.end() - 2);
  auto sa = broadcast_strides(abatch, batch);
  auto sb = broadcast_strides(bbatch, batch);
  for (auto& s : sa) s *= m * k;
  for (auto& s : sb) s *= k * nn;
  TensorValue out(a.dtype(), out_shape);
  const bool fp = is_float(a.dtype());
  strided_loop<2>(batch, {&sa, &sb}, [&](std::int64_t bi, const auto& off) {
    for (std::int64_t i = 0; i < m; ++i) {
      for (std::int64_t j = 0; j < nn; ++j) {
        const auto o = static_cast<std::size_t>(bi * m * nn + i * nn + j);
        if (fp) {
          double acc = 0.0;
          for (std::int64_t p = 0; p < k; ++p) {
            acc += static_cast<double>(a.floats()[off[0] + i * k + p]) * static_cast<double>(b.floats()[off[1] + p * nn + j]);
          }
          out.floats()[o] = static_cast<float>(acc);
        } else {
          std::int64_t acc = 0;
          for (std::int64_t p = 0; p < k; ++p) {
            acc = wrap_add(acc, wrap_mul(a.ints()[off[0] + i * k + p], b.ints()[off[1] + p * nn + j]));
          }
          out.ints()[o] = acc;
        }
      }
    }
  });
  return out;
}

TensorValue einsum(const Node& n, const std::vector<const TensorValue*>& in, const StaticShape& out_shape) {
  const auto eq = parse_einsum(*n.string_attr("equation"), in.size());
  std::string labels = eq.output;
  std::map<char, std::int64_t> extent;
  for (std::size_t i = 0; i < in.size(); ++i) {
    for (std::size_t d = 0; d < eq.operands[i].size(); ++d) {
      const char c = eq.operands[i][d];
      extent[c] = in[i]->shape()[d];
      if (labels.find(c) == std::string::npos) labels.push_back(c);
    }
  }
  StaticShape loop_shape;
  for (char c : labels) loop_shape.push_back(extent.at(c));
  // One stride per loop label for each operand; repeated labels add up,
  // which walks the diagonal.
  std::vector<Strides> strides(in.size() + 1, Strides(labels.size(), 0));
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto rs = row_strides(in[i]->shape());
    for (std::size_t d = 0; d < eq.operands[i].size(); ++d) strides[i][labels.find(eq.operands[i][d])] += rs[d];
  }
  const auto out_rs = row_strides(out_shape);
  for (std::size_t d = 0; d < eq.output.size(); ++d) strides[in.size()][d] = out_rs[d];

  const std::int64_t total = element_count(loop_shape);
  const std::size_t rank = loop_shape.size();
  std::vector<std::int64_t> idx(rank, 0);
  std::vector<std::int64_t> off(in.size() + 1, 0);
  TensorValue out(in[0]->dtype(), out_shape);
  const bool fp = is_float(in[0]->dtype());
  std::vector<double> facc(fp ? static_cast<std::size_t>(out.numel()) : 0, 0.0);
  for (std::int64_t it = 0; it < total; ++it) {
    if (fp) {
      double prod = 1.0;
      for (std::size_t i = 0; i < in.size(); ++i) prod *= static_cast<double>(in[i]->floats()[off[i]]);
      facc[off[in.size()]] += prod;
    } else {
      std::int64_t prod = 1;
      for (std::size_t i = 0; i < in.size(); ++i) prod = wrap_mul(prod, in[i]->ints()[off[i]]);
      out.ints()[off[in.size()]] = wrap_add(out.ints()[off[in.size()]], prod);
    }
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < loop_shape[d]) {
        for (std::size_t k = 0; k < off.size(); ++k) off[k] += strides[k][d];
        break;
      }
      for (std::size_t k = 0; k < off.size(); ++k) off[k] -= strides[k][d] * (loop_shape[d] - 1);
      idx[d] = 0;
    }
  }
  if (fp) {
    for (std::size_t i = 0; i < facc.size(); ++i) out.floats()[i] = static_cast<float>(facc[i]);
  }
  return out;
}

TensorValue transpose(const Node& n, const TensorValue& a, const StaticShape& out_shape) {
  const auto perm = *n.ints_attr("perm");
  const auto rs = row_strides(a.shape());
  Strides st(perm.size());
  for (std::size_t d = 0; d < perm.size(); ++d) st[d] = rs[static_cast<std::size_t>(perm[d])];
  TensorValue out(a.dtype(), out_shape);
  strided_loop<1>(out_shape, {&st}, [&](std::int64_t i, const auto& off) {
    if (is_float(a.dtype())) {
      out.floats()[i] = a.floats()[off[0]];
    } else {
      out.ints()[i] = a.ints()[off[0]];
    }
  });
  return out;
}

TensorValue reshape(const TensorValue& a, const StaticShape& out_shape) {
  if (is_float(a.dtype())) {
    return TensorValue::from_floats(a.dtype(), out_shape, {a.floats().begin(), a.floats().end()});
  }
  return TensorValue::from_ints(a.dtype(), out_shape, {a.ints().begin(), a.ints().end()});
}

TensorValue concat(const Node& n, const std::vector<const TensorValue*>& in, const StaticShape& out_shape) {
  const std::size_t axis = normalize_axis(*n.int_attr("axis"), out_shape.size());
  std::int64_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
  std::int64_t inner = 1;
  for (std::size_t d = axis + 1; d < out_shape.size(); ++d) inner *= out_shape[d];
  TensorValue out(in[0]->dtype(), out_shape);
  std::int64_t o = 0;
  for (std::int64_t b = 0; b < outer; ++b) {
    for (const auto* t : in) {
      const std::int64_t chunk = t->shape()[axis] * inner;
      for (std::int64_t i = 0; i < chunk; ++i, ++o) {
        if (is_float(t->dtype())) {
          out.floats()[o] = t->floats()[b * chunk + i];
        } else {
          out.ints()[o] = t->ints()[b * chunk + i];
        }
      }
    }
  }
  return out;
}

TensorValue reduce(const Node& n, const TensorValue& a, const StaticShape& out_shape) {
  const std::size_t rank = a.shape().size();
  std::set<std::size_t> axes;
  if (auto ax = n.ints_attr("axes")) {
    for (auto v : *ax) axes.insert(normalize_axis(v, rank));
  } else {
    for (std::size_t i = 0; i < rank; ++i) axes.insert(i);
  }
  StaticShape kept = a.shape();
  for (auto ax : axes) kept[ax] = 1;
  auto st = row_strides(kept);
  for (auto ax : axes) st[ax] = 0;
  const auto count = static_cast<std::size_t>(element_count(kept));
  const bool is_max = n.op == OpKind::ReduceMax;
  TensorValue out(a.dtype(), out_shape);
  if (is_float(a.dtype())) {
    std::vector<double> acc(count, is_max ? -std::numeric_limits<double>::infinity() : 0.0);
    strided_loop<1>(a.shape(), {&st}, [&](std::int64_t i, const auto& off) {
      const double v = a.floats()[i];
      auto& slot = acc[static_cast<std::size_t>(off[0])];
      if (!is_max) {
        slot += v;
      } else if (std::isnan(v) || v > slot) {
        slot = std::isnan(slot) ? slot : v;
      }
    });
    for (std::size_t i = 0; i < count; ++i) out.floats()[i] = static_cast<float>(acc[i]);
  } else {
    std::vector<std::int64_t> acc(count, is_max ? std::numeric_limits<std::int64_t>::min() : 0);
    strided_loop<1>(a.shape(), {&st}, [&](std::int64_t i, const auto& off) {
      auto& slot = acc[static_cast<std::size_t>(off[0])];
      slot = is_max ? std::max(slot, a.ints()[i]) : wrap_add(slot, a.ints()[i]);
    });
    std::copy(acc.begin(), acc.end(), out.ints().begin());
  }
  return out;
}

TensorValue softmax(const Node& n, const TensorValue& a) {
  const auto& s = a.shape();
  const std::size_t axis = normalize_axis(n.int_attr("axis").value_or(-1), s.size());
  std::int64_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  const std::int64_t len = s[axis];
  std::int64_t inner = 1;
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  TensorValue out(a.dtype(), s);
  auto x = a.floats();
  auto y = out.floats();
  std::vector<double> e(static_cast<std::size_t>(len));
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const std::int64_t base = o * len * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::int64_t k = 0; k < len; ++k) mx = std::max(mx, static_cast<double>(x[base + k * inner]));
      double sum = 0.0;
      for (std::int64_t k = 0; k < len; ++k) {
        e[static_cast<std::size_t>(k)] = std::exp(static_cast<double>(x[base + k * inner]) - mx);
        sum += e[static_cast<std::size_t>(k)];
      }
      for (std::int64_t k = 0; k < len; ++k) y[base + k * inner] = static_cast<float>(e[static_cast<std::size_t>(k)] / sum);
    }
  }
  return out;
}

TensorValue maxpool(const Node& n, const TensorValue& a, const StaticShape& out_shape, std::size_t spatial) {
  const auto kernel = *n.ints_attr("kernel");
  const auto stride = n.ints_attr("stride").value_or(kernel);
  const auto pads = n.ints_attr("pads").value_or(std::vector<std::int64_t>(spatial, 0));
  const auto& is = a.shape();
  const std::int64_t planes = is[0] * is[1];
  StaticShape in_sp(is.begin() + 2, is.end());
  StaticShape out_sp(out_shape.begin() + 2, out_shape.end());
  const std::int64_t in_plane = element_count(in_sp);
  const std::int64_t out_plane = element_count(out_sp);
  const auto in_rs = row_strides(in_sp);
  const bool fp = is_float(a.dtype());
  TensorValue out(a.dtype(), out_shape);
  std::vector<std::int64_t> oidx(spatial), widx(spatial);
  const std::int64_t window = std::accumulate(kernel.begin(), kernel.end(), std::int64_t{1}, std::multiplies<>());
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t o = 0; o < out_plane; ++o) {
      std::int64_t rem = o;
      for (std::size_t d = spatial; d-- > 0;) {
        oidx[d] = rem % out_sp[d];
        rem /= out_sp[d];
      }
      double best = -std::numeric_limits<double>::infinity();
      std::int64_t ibest = std::numeric_limits<std::int64_t>::min();
      for (std::int64_t w = 0; w < window; ++w) {
        std::int64_t wr = w;
        for (std::size_t d = spatial; d-- > 0;) {
          widx[d] = wr % kernel[d];
          wr /= kernel[d];
        }
        std::int64_t off = 0;
        bool inside = true;
        for (std::size_t d = 0; d < spatial; ++d) {
          const std::int64_t pos = oidx[d] * stride[d] - pads[d] + widx[d];
          if (pos < 0 || pos >= in_sp[d]) {
            inside = false;
            break;
          }
          off += pos * in_rs[d];
        }
        if (!inside) continue;
        if (fp) {
          const double v = a.floats()[p * in_plane + off];
          if (std::isnan(v) || v > best) best = std::isnan(best) ? best : v;
        } else {
          ibest = std::max(ibest, a.ints()[p * in_plane + off]);
        }
      }
      if (fp) {
        out.floats()[p * out_plane + o] = static_cast<float>(best);
      } else {
        out.ints()[p * out_plane + o] = ibest;
      }
    }
  }
  return out;
}

TensorValue conv2d(const Node& n, const std::vector<const TensorValue*>& in, const StaticShape& out_shape) {
  const auto& x = *in[0];
  const auto& w = *in[1];
  const TensorValue* bias = in.size() == 3 ? in[2] : nullptr;
  const auto stride = n.ints_attr("stride").value_or(std::vector<std::int64_t>{1, 1});
  const auto pads = n.ints_attr("pads").value_or(std::vector<std::int64_t>{0, 0});
  const std::int64_t batch = x.shape()[0], cin = x.shape()[1], h = x.shape()[2], wd = x.shape()[3];
  const std::int64_t cout = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
  const std::int64_t oh = out_shape[2], ow = out_shape[3];
  TensorValue out(x.dtype(), out_shape);
  auto xv = x.floats();
  auto wv = w.floats();
  auto ov = out.floats();
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t co = 0; co < cout; ++co) {
      for (std::int64_t i = 0; i < oh; ++i) {
        for (std::int64_t j = 0; j < ow; ++j) {
          double acc = bias ? static_cast<double>(bias->floats()[co]) : 0.0;
          for (std::int64_t ci = 0; ci < cin; ++ci) {
            for (std::int64_t u = 0; u < kh; ++u) {
              const std::int64_t y = i * stride[0] - pads[0] + u;
              if (y < 0 || y >= h) continue;
              for (std::int64_t v = 0; v < kw; ++v) {
                const std::int64_t xx = j * stride[1] - pads[1] + v;
                if (xx < 0 || xx >= wd) continue;
                acc += static_cast<double>(xv[((b * cin + ci) * h + y) * wd + xx]) *
                       static_cast<double>(wv[((co * cin + ci) * kh + u) * kw + v]);
              }
            }
          }
          ov[((b * cout + co) * oh + i) * ow + j] = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

}  // namespace

TensorValue evaluate_node(const Graph& graph, const Node& node, const std::vector<const TensorValue*>& in) {
  const TensorSpec* spec = graph.spec(node.outputs.at(0));
  if (!spec) fail(ErrorCode::InvalidGraph, "node '" + node.id + "' evaluated before shape inference");
  const StaticShape out_shape = to_static(spec->shape);
  TensorValue out;
  switch (node.op) {
    case OpKind::Constant: out = graph.constants.at(*node.string_attr("value")); break;
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
    case OpKind::Mod: out = binary(node, *in[0], *in[1], out_shape); break;
    case OpKind::Floor:
    case OpKind::Neg:
    case OpKind::Relu:
    case OpKind::Exp: out = unary(node, *in[0]); break;
    case OpKind::Cast: out = cast(*in[0], spec->dtype); break;
    case OpKind::MatMul: out = matmul(*in[0], *in[1], out_shape); break;
    case OpKind::Einsum: out = einsum(node, in, out_shape); break;
    case OpKind::Transpose: out = transpose(node, *in[0], out_shape); break;
    case OpKind::Reshape: out = reshape(*in[0], out_shape); break;
    case OpKind::Concat: out = concat(node, in, out_shape); break;
    case OpKind::ReduceMax:
    case OpKind::ReduceSum: out = reduce(node, *in[0], out_shape); break;
    case OpKind::Softmax: out = softmax(node, *in[0]); break;
    case OpKind::MaxPool2d: out = maxpool(node, *in[0], out_shape, 2); break;
    case OpKind::MaxPool3d: out = maxpool(node, *in[0], out_shape, 3); break;
    case OpKind::Conv2d: out = conv2d(node, in, out_shape); break;
  }
  finish(out);
  return out;
}

}  // namespace portir
