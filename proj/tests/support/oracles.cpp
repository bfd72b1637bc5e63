// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "portir/dtype.hpp"

namespace portir::testing {

namespace {

struct HalfTable {
  // Non-negative finite halves sorted by value, paired with their bits.
  std::vector<std::pair<double, std::uint16_t>> values;
  HalfTable() {
    for (std::uint32_t bits = 0; bits < 0x7c00; ++bits) {
      values.emplace_back(static_cast<double>(oracle_f16_value(static_cast<std::uint16_t>(bits))),
                          static_cast<std::uint16_t>(bits));
    }
    std::sort(values.begin(), values.end());
  }
};

const HalfTable& half_table() {
  static const HalfTable table;
  return table;
}

std::int64_t wrap(std::uint64_t v) { return static_cast<std::int64_t>(v); }

std::int64_t clamp_to(std::int64_t v, DType t) { return std::clamp(v, dtype_min(t), dtype_max(t)); }

TensorValue make(DType dtype, const StaticShape& shape) { return TensorValue(dtype, shape); }

void put(TensorValue& t, std::int64_t i, double v) {
  if (is_float(t.dtype())) {
    t.floats()[static_cast<std::size_t>(i)] = static_cast<float>(v);
  } else {
    t.ints()[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(v);
  }
}

float f(const TensorValue& t, std::int64_t i) { return t.floats()[static_cast<std::size_t>(i)]; }
std::int64_t n_(const TensorValue& t, std::int64_t i) { return t.ints()[static_cast<std::size_t>(i)]; }

std::int64_t broadcast_source(const std::vector<std::int64_t>& out_idx, const StaticShape& src) {
  std::vector<std::int64_t> idx(src.size());
  const std::size_t lead = out_idx.size() - src.size();
  for (std::size_t d = 0; d < src.size(); ++d) idx[d] = src[d] == 1 ? 0 : out_idx[lead + d];
  return ravel(idx, src);
}

TensorValue binary(OpKind op, const TensorValue& a, const TensorValue& b, const StaticShape& out_shape) {
  TensorValue out = make(a.dtype(), out_shape);
  const std::int64_t total = element_count(out_shape);
  for (std::int64_t i = 0; i < total; ++i) {
    const auto idx = unravel(i, out_shape);
    const std::int64_t ia = broadcast_source(idx, a.shape());
    const std::int64_t ib = broadcast_source(idx, b.shape());
    if (is_float(a.dtype())) {
      const float x = f(a, ia);
      const float y = f(b, ib);
      float r = 0.0f;
      switch (op) {
        case OpKind::Add: r = x + y; break;
        case OpKind::Sub: r = x - y; break;
        case OpKind::Mul: r = x * y; break;
        case OpKind::Div: r = x / y; break;
        case OpKind::Mod: {
          const float q = std::floor(x / y);
          const float m = y * q;
          r = x - m;
          break;
        }
        default: throw std::logic_error("not binary");
      }
      out.floats()[static_cast<std::size_t>(i)] = r;
    } else {
      const std::int64_t x = n_(a, ia);
      const std::int64_t y = n_(b, ib);
      std::int64_t r = 0;
      switch (op) {
        case OpKind::Add: r = wrap(static_cast<std::uint64_t>(x) + static_cast<std::uint64_t>(y)); break;
        case OpKind::Sub: r = wrap(static_cast<std::uint64_t>(x) - static_cast<std::uint64_t>(y)); break;
        case OpKind::Mul: r = wrap(static_cast<std::uint64_t>(x) * static_cast<std::uint64_t>(y)); break;
        case OpKind::Div: r = x / y; break;
        case OpKind::Mod: r = y == -1 ? 0 : x % y; break;
        default: throw std::logic_error("not binary");
      }
      out.ints()[static_cast<std::size_t>(i)] = r;
    }
  }
  return out;
}

std::vector<std::size_t> axes_of(const Node& n, std::size_t rank) {
  std::set<std::size_t> axes;
  if (auto a = n.ints_attr("axes")) {
    for (auto v : *a) axes.insert(static_cast<std::size_t>(v < 0 ? v + static_cast<std::int64_t>(rank) : v));
  } else {
    for (std::size_t i = 0; i < rank; ++i) axes.insert(i);
  }
  return {axes.begin(), axes.end()};
}

TensorValue reduce(const Node& n, const TensorValue& x, const StaticShape& out_shape) {
  const auto& s = x.shape();
  const auto axes = axes_of(n, s.size());
  const bool keep = n.int_attr("keepdims").value_or(1) != 0;
  const bool is_max = n.op == OpKind::ReduceMax;
  const std::int64_t count = element_count(out_shape);
  std::vector<double> acc(static_cast<std::size_t>(count), is_max ? -INFINITY : 0.0);
  std::vector<std::int64_t> iacc(static_cast<std::size_t>(count), is_max ? std::numeric_limits<std::int64_t>::min() : 0);
  for (std::int64_t i = 0; i < element_count(s); ++i) {
    const auto idx = unravel(i, s);
    std::vector<std::int64_t> o;
    for (std::size_t d = 0; d < s.size(); ++d) {
      const bool reduced = std::find(axes.begin(), axes.end(), d) != axes.end();
      if (!reduced) {
        o.push_back(idx[d]);
      } else if (keep) {
        o.push_back(0);
      }
    }
    const auto oi = static_cast<std::size_t>(ravel(o, out_shape));
    if (is_float(x.dtype())) {
      const double v = f(x, i);
      if (!is_max) {
        acc[oi] += v;
      } else if (std::isnan(acc[oi]) || std::isnan(v)) {
        acc[oi] = NAN;
      } else {
        acc[oi] = std::max(acc[oi], v);
      }
    } else {
      iacc[oi] = is_max ? std::max(iacc[oi], n_(x, i))
                        : wrap(static_cast<std::uint64_t>(iacc[oi]) + static_cast<std::uint64_t>(n_(x, i)));
    }
  }
  TensorValue out = make(x.dtype(), out_shape);
  for (std::int64_t i = 0; i < count; ++i) {
    if (is_float(x.dtype())) {
      put(out, i, acc[static_cast<std::size_t>(i)]);
    } else {
      out.ints()[static_cast<std::size_t>(i)] = iacc[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

TensorValue einsum(const std::string& equation, const std::vector<TensorValue>& in, const StaticShape& out_shape) {
  std::string eq;
  for (char c : equation) {
    if (c != ' ') eq.push_back(c);
  }
  const auto arrow = eq.find("->");
  std::vector<std::string> ops;
  std::string cur;
  for (char c : eq.substr(0, arrow)) {
    if (c == ',') {
      ops.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  ops.push_back(cur);
  const std::string out_labels = eq.substr(arrow + 2);
  std::map<char, std::int64_t> extent;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (std::size_t d = 0; d < ops[i].size(); ++d) extent[ops[i][d]] = in[i].shape()[d];
  }
  std::vector<char> labels;
  StaticShape space;
  for (const auto& [c, e] : extent) {
    labels.push_back(c);
    space.push_back(e);
  }
  std::vector<double> acc(static_cast<std::size_t>(element_count(out_shape)), 0.0);
  const std::int64_t total = element_count(space);
  for (std::int64_t it = 0; it < total; ++it) {
    const auto v = unravel(it, space);
    std::map<char, std::int64_t> at;
    for (std::size_t k = 0; k < labels.size(); ++k) at[labels[k]] = v[k];
    double prod = 1.0;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      std::vector<std::int64_t> idx;
      for (char c : ops[i]) idx.push_back(at[c]);
      prod *= in[i].at(ravel(idx, in[i].shape()));
    }
    std::vector<std::int64_t> oidx;
    for (char c : out_labels) oidx.push_back(at[c]);
    acc[static_cast<std::size_t>(ravel(oidx, out_shape))] += prod;
  }
  TensorValue out = make(in[0].dtype(), out_shape);
  for (std::size_t i = 0; i < acc.size(); ++i) put(out, static_cast<std::int64_t>(i), acc[i]);
  return out;
}

TensorValue maxpool2d(const TensorValue& x, const std::vector<std::int64_t>& k, const std::vector<std::int64_t>& s,
                      const std::vector<std::int64_t>& p, const StaticShape& out_shape) {
  TensorValue out = make(x.dtype(), out_shape);
  const auto& is = x.shape();
  for (std::int64_t b = 0; b < is[0]; ++b) {
    for (std::int64_t c = 0; c < is[1]; ++c) {
      for (std::int64_t i = 0; i < out_shape[2]; ++i) {
        for (std::int64_t j = 0; j < out_shape[3]; ++j) {
          double best = -INFINITY;
          bool nan = false;
          for (std::int64_t u = 0; u < k[0]; ++u) {
            for (std::int64_t v = 0; v < k[1]; ++v) {
              const std::int64_t y = i * s[0] - p[0] + u;
              const std::int64_t z = j * s[1] - p[1] + v;
              if (y < 0 || y >= is[2] || z < 0 || z >= is[3]) continue;
              const double val = x.at(ravel({b, c, y, z}, is));
              if (std::isnan(val)) nan = true;
              best = std::max(best, val);
            }
          }
          put(out, ravel({b, c, i, j}, out_shape), nan ? NAN : best);
        }
      }
    }
  }
  return out;
}

TensorValue conv2d(const std::vector<TensorValue>& in, const std::vector<std::int64_t>& s,
                   const std::vector<std::int64_t>& p, const StaticShape& out_shape) {
  const auto& x = in[0];
  const auto& w = in[1];
  TensorValue out = make(x.dtype(), out_shape);
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  for (std::int64_t b = 0; b < out_shape[0]; ++b) {
    for (std::int64_t co = 0; co < out_shape[1]; ++co) {
      for (std::int64_t i = 0; i < out_shape[2]; ++i) {
        for (std::int64_t j = 0; j < out_shape[3]; ++j) {
          double acc = in.size() == 3 ? in[2].at(co) : 0.0;
          for (std::int64_t ci = 0; ci < xs[1]; ++ci) {
            for (std::int64_t u = 0; u < ws[2]; ++u) {
              for (std::int64_t v = 0; v < ws[3]; ++v) {
                const std::int64_t y = i * s[0] - p[0] + u;
                const std::int64_t z = j * s[1] - p[1] + v;
                if (y < 0 || y >= xs[2] || z < 0 || z >= xs[3]) continue;
                acc += x.at(ravel({b, ci, y, z}, xs)) * w.at(ravel({co, ci, u, v}, ws));
              }
            }
          }
          put(out, ravel({b, co, i, j}, out_shape), acc);
        }
      }
    }
  }
  return out;
}

TensorValue finish(TensorValue t) {
  if (t.dtype() == DType::F16) {
    for (auto& v : t.floats()) v = oracle_round_f16(v);
  } else if (is_integer(t.dtype())) {
    for (auto& v : t.ints()) v = clamp_to(v, t.dtype());
  }
  return t;
}

}  // namespace

float oracle_f16_value(std::uint16_t bits) {
  const int sign = (bits >> 15) & 1;
  const int exp = (bits >> 10) & 0x1f;
  const int man = bits & 0x3ff;
  double v = 0.0;
  if (exp == 0x1f) {
    v = man ? NAN : INFINITY;
  } else if (exp == 0) {
    v = std::ldexp(static_cast<double>(man), -24);
  } else {
    v = std::ldexp(static_cast<double>(man + 1024), exp - 25);
  }
  return static_cast<float>(sign ? -v : v);
}

std::uint16_t oracle_f16_bits(float x) {
  if (std::isnan(x)) return 0x7e00;
  const std::uint16_t sign = std::signbit(x) ? 0x8000 : 0;
  const double a = std::fabs(static_cast<double>(x));
  // Largest finite half is 65504; halfway to the next binade step is 65520.
  if (a >= 65520.0) return sign | 0x7c00;
  const auto& vals = half_table().values;
  auto hi = std::lower_bound(vals.begin(), vals.end(), std::make_pair(a, std::uint16_t{0}));
  if (hi == vals.end()) return sign | 0x7bff;
  if (hi->first == a || hi == vals.begin()) return sign | hi->second;
  auto lo = hi - 1;
  const double dlo = a - lo->first;
  const double dhi = hi->first - a;
  if (dlo < dhi) return sign | lo->second;
  if (dhi < dlo) return sign | hi->second;
  return sign | ((lo->second & 1) == 0 ? lo->second : hi->second);
}

float oracle_round_f16(float x) {
  if (std::isnan(x)) return x;
  return oracle_f16_value(oracle_f16_bits(x));
}

std::vector<std::int64_t> unravel(std::int64_t flat, const StaticShape& shape) {
  std::vector<std::int64_t> idx(shape.size(), 0);
  for (std::size_t d = shape.size(); d-- > 0;) {
    idx[d] = flat % shape[d];
    flat /= shape[d];
  }
  return idx;
}

std::int64_t ravel(const std::vector<std::int64_t>& index, const StaticShape& shape) {
  std::int64_t flat = 0;
  for (std::size_t d = 0; d < shape.size(); ++d) flat = flat * shape[d] + index[d];
  return flat;
}

TensorValue oracle_maxpool3d(const TensorValue& x, const std::vector<std::int64_t>& k, const std::vector<std::int64_t>& s,
                             const std::vector<std::int64_t>& p) {
  const auto& is = x.shape();
  auto ext = [](std::int64_t in, std::int64_t kk, std::int64_t ss, std::int64_t pp) { return (in + 2 * pp - kk) / ss + 1; };
  const StaticShape os{is[0], is[1], ext(is[2], k[0], s[0], p[0]), ext(is[3], k[1], s[1], p[1]), ext(is[4], k[2], s[2], p[2])};
  TensorValue out = make(x.dtype(), os);
  for (std::int64_t n = 0; n < os[0]; ++n) {
    for (std::int64_t c = 0; c < os[1]; ++c) {
      for (std::int64_t d = 0; d < os[2]; ++d) {
        for (std::int64_t h = 0; h < os[3]; ++h) {
          for (std::int64_t w = 0; w < os[4]; ++w) {
            double best = -INFINITY;
            bool nan = false;
            for (std::int64_t a = 0; a < k[0]; ++a) {
              for (std::int64_t b = 0; b < k[1]; ++b) {
                for (std::int64_t e = 0; e < k[2]; ++e) {
                  const std::int64_t zd = d * s[0] - p[0] + a;
                  const std::int64_t zh = h * s[1] - p[1] + b;
                  const std::int64_t zw = w * s[2] - p[2] + e;
                  if (zd < 0 || zd >= is[2] || zh < 0 || zh >= is[3] || zw < 0 || zw >= is[4]) continue;
                  const double v = x.at(ravel({n, c, zd, zh, zw}, is));
                  if (std::isnan(v)) nan = true;
                  best = std::max(best, v);
                }
              }
            }
            put(out, ravel({n, c, d, h, w}, os), nan ? NAN : best);
          }
        }
      }
    }
  }
  return out;
}

TensorValue oracle_node(const Node& n, const std::vector<TensorValue>& in, const StaticShape& out_shape,
                        const std::map<std::string, TensorValue>& constants) {
  switch (n.op) {
    case OpKind::Constant: return constants.at(*n.string_attr("value"));
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
    case OpKind::Mod: return finish(binary(n.op, in[0], in[1], out_shape));
    case OpKind::Floor:
    case OpKind::Neg:
    case OpKind::Relu:
    case OpKind::Exp: {
      TensorValue out = in[0];
      for (std::int64_t i = 0; i < out.numel(); ++i) {
        if (is_float(out.dtype())) {
          const float v = f(in[0], i);
          float r = v;
          if (n.op == OpKind::Floor) r = std::floor(v);
          if (n.op == OpKind::Neg) r = -v;
          if (n.op == OpKind::Relu) r = v > 0.0f ? v : 0.0f;
          if (n.op == OpKind::Exp) r = std::exp(v);
          out.floats()[static_cast<std::size_t>(i)] = r;
        } else {
          const std::int64_t v = n_(in[0], i);
          std::int64_t r = v;
          if (n.op == OpKind::Neg) r = wrap(0 - static_cast<std::uint64_t>(v));
          if (n.op == OpKind::Relu) r = v > 0 ? v : 0;
          out.ints()[static_cast<std::size_t>(i)] = r;
        }
      }
      return finish(out);
    }
    case OpKind::Cast: {
      const DType to = parse_dtype(*n.string_attr("to"));
      TensorValue out = make(to, in[0].shape());
      for (std::int64_t i = 0; i < out.numel(); ++i) {
        if (is_float(to)) {
          out.floats()[static_cast<std::size_t>(i)] =
              is_float(in[0].dtype()) ? f(in[0], i) : static_cast<float>(n_(in[0], i));
        } else if (is_float(in[0].dtype())) {
          const double v = f(in[0], i);
          std::int64_t r = 0;
          if (std::isnan(v)) {
            r = 0;
          } else if (std::trunc(v) <= static_cast<double>(dtype_min(to))) {
            r = dtype_min(to);
          } else if (std::trunc(v) >= static_cast<double>(dtype_max(to))) {
            r = dtype_max(to);
          } else {
            r = static_cast<std::int64_t>(std::trunc(v));
          }
          out.ints()[static_cast<std::size_t>(i)] = r;
        } else {
          out.ints()[static_cast<std::size_t>(i)] = n_(in[0], i);
        }
      }
      return finish(out);
    }
    case OpKind::MatMul: {
      const auto& a = in[0];
      const auto& b = in[1];
      const std::int64_t k = a.shape().back();
      TensorValue out = make(a.dtype(), out_shape);
      for (std::int64_t o = 0; o < element_count(out_shape); ++o) {
        const auto idx = unravel(o, out_shape);
        double acc = 0.0;
        std::int64_t iacc = 0;
        for (std::int64_t p = 0; p < k; ++p) {
          auto ia = idx;
          ia[ia.size() - 1] = p;
          auto ib = idx;
          ib[ib.size() - 2] = p;
          const std::int64_t oa = broadcast_source(ia, a.shape());
          const std::int64_t ob = broadcast_source(ib, b.shape());
          if (is_float(a.dtype())) {
            acc += static_cast<double>(f(a, oa)) * static_cast<double>(f(b, ob));
          } else {
            iacc = wrap(static_cast<std::uint64_t>(iacc) +
                        static_cast<std::uint64_t>(n_(a, oa)) * static_cast<std::uint64_t>(n_(b, ob)));
          }
        }
        if (is_float(a.dtype())) {
          put(out, o, acc);
        } else {
          out.ints()[static_cast<std::size_t>(o)] = iacc;
        }
      }
      return finish(out);
    }
    case OpKind::Einsum: return finish(einsum(*n.string_attr("equation"), in, out_shape));
    case OpKind::Transpose: {
      const auto perm = *n.ints_attr("perm");
      TensorValue out = make(in[0].dtype(), out_shape);
      for (std::int64_t o = 0; o < out.numel(); ++o) {
        const auto idx = unravel(o, out_shape);
        std::vector<std::int64_t> src(idx.size());
        for (std::size_t d = 0; d < perm.size(); ++d) src[static_cast<std::size_t>(perm[d])] = idx[d];
        put(out, o, in[0].at(ravel(src, in[0].shape())));
      }
      return out;
    }
    case OpKind::Reshape: {
      TensorValue out = make(in[0].dtype(), out_shape);
      for (std::int64_t i = 0; i < out.numel(); ++i) put(out, i, in[0].at(i));
      return out;
    }
    case OpKind::Concat: {
      const std::int64_t rank = static_cast<std::int64_t>(out_shape.size());
      std::int64_t axis = *n.int_attr("axis");
      if (axis < 0) axis += rank;
      TensorValue out = make(in[0].dtype(), out_shape);
      for (std::int64_t o = 0; o < out.numel(); ++o) {
        auto idx = unravel(o, out_shape);
        std::size_t which = 0;
        while (idx[static_cast<std::size_t>(axis)] >= in[which].shape()[static_cast<std::size_t>(axis)]) {
          idx[static_cast<std::size_t>(axis)] -= in[which].shape()[static_cast<std::size_t>(axis)];
          ++which;
        }
        const std::int64_t src = ravel(idx, in[which].shape());
        if (is_float(out.dtype())) {
          out.floats()[static_cast<std::size_t>(o)] = f(in[which], src);
        } else {
          out.ints()[static_cast<std::size_t>(o)] = n_(in[which], src);
        }
      }
      return out;
    }
    case OpKind::ReduceMax:
    case OpKind::ReduceSum: return finish(reduce(n, in[0], out_shape));
    case OpKind::Softmax: {
      const auto& s = in[0].shape();
      std::int64_t axis = n.int_attr("axis").value_or(-1);
      if (axis < 0) axis += static_cast<std::int64_t>(s.size());
      const auto ax = static_cast<std::size_t>(axis);
      TensorValue out = make(in[0].dtype(), s);
      for (std::int64_t o = 0; o < out.numel(); ++o) {
        auto idx = unravel(o, s);
        double mx = -INFINITY;
        for (std::int64_t k = 0; k < s[ax]; ++k) {
          idx[ax] = k;
          mx = std::max(mx, static_cast<double>(f(in[0], ravel(idx, s))));
        }
        double sum = 0.0;
        for (std::int64_t k = 0; k < s[ax]; ++k) {
          idx[ax] = k;
          sum += std::exp(static_cast<double>(f(in[0], ravel(idx, s))) - mx);
        }
        put(out, o, std::exp(static_cast<double>(f(in[0], o)) - mx) / sum);
      }
      return finish(out);
    }
    case OpKind::MaxPool2d: {
      const auto k = *n.ints_attr("kernel");
      return finish(maxpool2d(in[0], k, n.ints_attr("stride").value_or(k),
                              n.ints_attr("pads").value_or(std::vector<std::int64_t>{0, 0}), out_shape));
    }
    case OpKind::MaxPool3d: {
      const auto k = *n.ints_attr("kernel");
      return finish(oracle_maxpool3d(in[0], k, n.ints_attr("stride").value_or(k),
                                     n.ints_attr("pads").value_or(std::vector<std::int64_t>{0, 0, 0})));
    }
    case OpKind::Conv2d:
      return finish(conv2d(in, n.ints_attr("stride").value_or(std::vector<std::int64_t>{1, 1}),
                           n.ints_attr("pads").value_or(std::vector<std::int64_t>{0, 0}), out_shape));
  }
  throw std::logic_error("unknown op");
}

}  // namespace portir::testing
