// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <stdlib.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "portir/dtype.hpp"
#include "portir/shape_inference.hpp"

#ifndef PORTIR_SOURCE_DIR
#error "PORTIR_SOURCE_DIR must be defined"
#endif

namespace portir::testing {

TempDir::TempDir(const std::string& tag) {
  std::string pattern = (fs::temp_directory_path() / (tag + "-XXXXXX")).string();
  if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

ScopedEnv::ScopedEnv(const char* name, const std::string& value) : name_(name) {
  if (const char* old = std::getenv(name)) {
    had_ = true;
    old_ = old;
  }
  ::setenv(name, value.c_str(), 1);
}

ScopedEnv::~ScopedEnv() {
  if (had_) {
    ::setenv(name_.c_str(), old_.c_str(), 1);
  } else {
    ::unsetenv(name_.c_str());
  }
}

fs::path source_dir() { return PORTIR_SOURCE_DIR; }

Graph single_op_graph(OpKind op, DType dtype, const std::vector<StaticShape>& in_shapes, Attributes attrs,
                      const StaticShape& out_shape) {
  Graph g;
  g.name = std::string(op_name(op)) + "_case";
  Node n{"out", op, {}, {"out"}, std::move(attrs)};
  for (std::size_t i = 0; i < in_shapes.size(); ++i) {
    const std::string name = "in" + std::to_string(i);
    g.inputs.push_back(TensorSpec{name, dtype, make_shape(in_shapes[i]), std::nullopt});
    n.inputs.push_back(name);
  }
  g.nodes.push_back(std::move(n));
  if (out_shape.empty()) {
    const Graph probe = infer_shapes(g);
    g.outputs.push_back(*probe.spec("out"));
  } else {
    g.outputs.push_back(TensorSpec{"out", dtype, make_shape(out_shape), std::nullopt});
  }
  return g;
}

TensorValue random_tensor(std::mt19937_64& rng, DType dtype, const StaticShape& shape, double lo, double hi) {
  TensorValue t(dtype, shape);
  if (is_float(dtype)) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : t.floats()) v = static_cast<float>(dist(rng));
  } else {
    std::uniform_int_distribution<std::int64_t> dist(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi));
    for (auto& v : t.ints()) v = dist(rng);
  }
  return t;
}

namespace {

struct Pool {
  struct Entry {
    std::string name;
    StaticShape shape;
  };
  std::vector<Entry> tensors;
};

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

StaticShape random_shape(std::mt19937_64& rng, int rank) {
  StaticShape s;
  for (int i = 0; i < rank; ++i) s.push_back(pick(rng, 1, 4));
  return s;
}

}  // namespace

Graph random_static_graph(std::mt19937_64& rng, int nodes) {
  Graph g;
  g.name = "random";
  Pool pool;
  const int n_inputs = pick(rng, 1, 2);
  for (int i = 0; i < n_inputs; ++i) {
    const std::string name = "x" + std::to_string(i);
    StaticShape s = random_shape(rng, pick(rng, 1, 4));
    g.inputs.push_back(TensorSpec{name, DType::F32, make_shape(s), std::nullopt});
    pool.tensors.push_back({name, s});
  }
  int counter = 0;
  auto fresh = [&](const std::string& stem) { return stem + "_" + std::to_string(counter++); };
  auto add_const = [&](const StaticShape& s) {
    const std::string name = fresh("c");
    g.constants.emplace(name, random_tensor(rng, DType::F32, s, -1.0, 1.0));
    g.nodes.push_back(Node{name, OpKind::Constant, {}, {name}, {{"value", name}}});
    return name;
  };
  auto emit = [&](OpKind op, std::vector<std::string> in, Attributes attrs, StaticShape out) {
    const std::string name = fresh(std::string(op_name(op)));
    g.nodes.push_back(Node{name, op, std::move(in), {name}, std::move(attrs)});
    pool.tensors.push_back({name, std::move(out)});
  };

  for (int step = 0; step < nodes; ++step) {
    const auto src = pool.tensors[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(pool.tensors.size()) - 1))];
    const auto& s = src.shape;
    const auto rank = static_cast<std::int64_t>(s.size());
    if (rank == 0) {
      emit(OpKind::Reshape, {src.name}, {{"shape", std::vector<std::int64_t>{1}}}, {1});
      continue;
    }
    switch (pick(rng, 0, 10)) {
      case 0: {
        StaticShape cs = s;
        for (auto& d : cs) {
          if (pick(rng, 0, 2) == 0) d = 1;
        }
        if (pick(rng, 0, 3) == 0 && !cs.empty()) cs.erase(cs.begin());
        const OpKind ops[] = {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Div};
        emit(ops[pick(rng, 0, 3)], {src.name, add_const(cs)}, {}, s);
        break;
      }
      case 1: {
        const OpKind ops[] = {OpKind::Relu, OpKind::Neg, OpKind::Floor, OpKind::Exp};
        emit(ops[pick(rng, 0, 3)], {src.name}, {}, s);
        break;
      }
      case 2: {
        std::vector<std::int64_t> perm(s.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        StaticShape out;
        for (auto p : perm) out.push_back(s[static_cast<std::size_t>(p)]);
        emit(OpKind::Transpose, {src.name}, {{"perm", perm}}, out);
        break;
      }
      case 3: {
        const std::int64_t total = element_count(s);
        if (pick(rng, 0, 1) == 0) {
          emit(OpKind::Reshape, {src.name}, {{"shape", std::vector<std::int64_t>{-1}}}, {total});
        } else {
          emit(OpKind::Reshape, {src.name}, {{"shape", std::vector<std::int64_t>{1, total, 1}}}, {1, total, 1});
        }
        break;
      }
      case 4: {
        const OpKind op = pick(rng, 0, 1) ? OpKind::ReduceSum : OpKind::ReduceMax;
        const std::int64_t axis = pick(rng, 0, static_cast<int>(rank) - 1);
        const bool keep = pick(rng, 0, 1) == 1;
        StaticShape out;
        for (std::int64_t d = 0; d < rank; ++d) {
          if (d != axis) {
            out.push_back(s[static_cast<std::size_t>(d)]);
          } else if (keep) {
            out.push_back(1);
          }
        }
        emit(op, {src.name}, {{"axes", std::vector<std::int64_t>{axis - (pick(rng, 0, 1) ? rank : 0)}}, {"keepdims", std::int64_t{keep}}},
             out);
        break;
      }
      case 5: {
        const std::int64_t axis = pick(rng, 0, static_cast<int>(rank) - 1);
        emit(OpKind::Softmax, {src.name}, {{"axis", axis}}, s);
        break;
      }
      case 6: {
        const std::int64_t axis = pick(rng, 0, static_cast<int>(rank) - 1);
        StaticShape out = s;
        out[static_cast<std::size_t>(axis)] *= 2;
        emit(OpKind::Concat, {src.name, src.name}, {{"axis", axis}}, out);
        break;
      }
      case 7: {
        if (rank < 2) {
          --step;
          continue;
        }
        const std::int64_t n = pick(rng, 1, 4);
        const std::string w = add_const({s.back(), n});
        StaticShape out = s;
        out.back() = n;
        emit(OpKind::MatMul, {src.name, w}, {}, out);
        break;
      }
      case 8: {
        if (rank != 4 || s[2] < 2 || s[3] < 2) {
          --step;
          continue;
        }
        const std::int64_t k = 2;
        const std::int64_t st = pick(rng, 1, 2);
        const std::int64_t pad = pick(rng, 0, 1);
        auto ext = [&](std::int64_t in) { return (in + 2 * pad - k) / st + 1; };
        emit(OpKind::MaxPool2d, {src.name},
             {{"kernel", std::vector<std::int64_t>{k, k}}, {"stride", std::vector<std::int64_t>{st, st}},
              {"pads", std::vector<std::int64_t>{pad, pad}}},
             {s[0], s[1], ext(s[2]), ext(s[3])});
        break;
      }
      case 9: {
        if (rank != 4) {
          --step;
          continue;
        }
        const std::int64_t cout = pick(rng, 1, 3);
        const std::int64_t k = pick(rng, 1, 3);
        if (k > s[2] + 2 || k > s[3] + 2) {
          --step;
          continue;
        }
        const std::string w = add_const({cout, s[1], k, k});
        const std::string b = add_const({cout});
        const std::int64_t pad = k / 2;
        auto ext = [&](std::int64_t in) { return in + 2 * pad - k + 1; };
        emit(OpKind::Conv2d, {src.name, w, b}, {{"pads", std::vector<std::int64_t>{pad, pad}}},
             {s[0], cout, ext(s[2]), ext(s[3])});
        break;
      }
      default: {
        if (rank >= 4) {
          --step;
          continue;
        }
        StaticShape out = s;
        out.insert(out.begin(), 1);
        while (out.size() < 4) out.push_back(1);
        emit(OpKind::Reshape, {src.name}, {{"shape", out}}, out);
        break;
      }
    }
  }
  const auto& last = pool.tensors.back();
  g.outputs.push_back(TensorSpec{last.name, DType::F32, make_shape(last.shape), std::nullopt});
  if (pool.tensors.size() > 2 && pick(rng, 0, 1)) {
    const auto& other = pool.tensors[pool.tensors.size() - 2];
    if (other.name != last.name && g.input_spec(other.name) == nullptr) {
      g.outputs.push_back(TensorSpec{other.name, DType::F32, make_shape(other.shape), std::nullopt});
    }
  }
  return g;
}

}  // namespace portir::testing
