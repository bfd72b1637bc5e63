// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/zoo.hpp"

#include <cmath>
#include <random>

#include "portir/error.hpp"

namespace portir {

namespace {

class Builder {
 public:
  explicit Builder(std::string name, std::uint64_t seed) : rng_(seed) { g_.name = std::move(name); }

  void input(const std::string& name, DType dtype, Shape shape, std::optional<ValueRange> range = std::nullopt) {
    g_.inputs.push_back(TensorSpec{name, dtype, std::move(shape), range});
  }

  void output(const std::string& name, DType dtype, Shape shape) {
    g_.outputs.push_back(TensorSpec{name, dtype, std::move(shape), std::nullopt});
  }

  std::string constant(const std::string& name, TensorValue value) {
    g_.constants.emplace(name, std::move(value));
    g_.nodes.push_back(Node{name, OpKind::Constant, {}, {name}, {{"value", name}}});
    return name;
  }

  std::string uniform(const std::string& name, StaticShape shape, double lo, double hi) {
    std::vector<float> data(static_cast<std::size_t>(element_count(shape)));
    for (auto& v : data) v = static_cast<float>(lo + (hi - lo) * (static_cast<double>(rng_() >> 11) * 0x1.0p-53));
    return constant(name, TensorValue::from_floats(DType::F32, std::move(shape), std::move(data)));
  }

  std::string scalar(const std::string& name, float v) { return constant(name, TensorValue::scalar_f32(v)); }

  std::string op(const std::string& id, OpKind kind, std::vector<std::string> inputs, Attributes attrs = {}) {
    g_.nodes.push_back(Node{id, kind, std::move(inputs), {id}, std::move(attrs)});
    return id;
  }

  std::string conv(const std::string& id, const std::string& x, std::int64_t cin, std::int64_t cout, double wscale,
                   double blo, double bhi) {
    const auto w = uniform(id + "_w", {cout, cin, 3, 3}, -wscale, wscale);
    const auto b = uniform(id + "_b", {cout}, blo, bhi);
    return op(id, OpKind::Conv2d, {x, w, b},
              {{"stride", std::vector<std::int64_t>{1, 1}}, {"pads", std::vector<std::int64_t>{1, 1}}});
  }

  Graph take() { return std::move(g_); }

 private:
  Graph g_;
  std::mt19937_64 rng_;
};

Shape dims(std::initializer_list<std::int64_t> d) { return make_shape(StaticShape(d)); }

Graph conv_block(const std::string& name, Shape in_shape, Shape out_shape) {
  Builder b(name, 7);
  b.input("image", DType::F32, std::move(in_shape), ValueRange{0.5, 1.0});
  auto h = b.conv("conv1", "image", 3, 8, 0.3, 0.0, 0.1);
  h = b.op("relu1", OpKind::Relu, {h});
  h = b.conv("conv2", h, 8, 3, 0.02, -0.01, 0.01);
  b.op("upscaled", OpKind::Add, {"image", h});
  b.output("upscaled", DType::F32, std::move(out_shape));
  return b.take();
}

Graph yolo_head(bool integer_mod) {
  Builder b(integer_mod ? "toy_yolo_int" : "toy_yolo", 11);
  b.input("logits", DType::F32, dims({1, 16}));
  b.input("anchor_idx", DType::I64, dims({1, 16}), ValueRange{0, 63});
  b.op("scores", OpKind::Softmax, {"logits"}, {{"axis", std::int64_t{-1}}});
  std::string col;
  if (integer_mod) {
    const auto grid = b.constant("grid", TensorValue::from_ints(DType::I64, {}, {8}));
    const auto m = b.op("cell_col", OpKind::Mod, {"anchor_idx", grid});
    col = b.op("cell_col_f", OpKind::Cast, {m}, {{"to", std::string("f32")}});
  } else {
    const auto idx = b.op("anchor_f", OpKind::Cast, {"anchor_idx"}, {{"to", std::string("f32")}});
    const auto grid = b.scalar("grid", 8.0f);
    col = b.op("cell_col", OpKind::Mod, {idx, grid});
  }
  const auto stride = b.scalar("stride", 4.0f);
  const auto offset = b.scalar("offset", 2.0f);
  const auto px = b.op("cell_px", OpKind::Mul, {col, stride});
  b.op("center_x", OpKind::Add, {px, offset});
  b.output("scores", DType::F32, dims({1, 16}));
  b.output("center_x", DType::F32, dims({1, 16}));
  return b.take();
}

Graph lpr() {
  Builder b("toy_lpr", 13);
  b.input("plate", DType::F32, dims({1, 4, 8, 8}));
  auto h = b.conv("conv1", "plate", 4, 8, 0.3, 0.0, 0.1);
  h = b.op("relu1", OpKind::Relu, {h});
  h = b.op("to_volume", OpKind::Reshape, {h}, {{"shape", std::vector<std::int64_t>{1, 2, 4, 8, 8}}});
  h = b.op("pool3d", OpKind::MaxPool3d, {h},
           {{"kernel", std::vector<std::int64_t>{2, 3, 3}}, {"stride", std::vector<std::int64_t>{2, 1, 2}}});
  b.op("features", OpKind::Reshape, {h}, {{"shape", std::vector<std::int64_t>{1, -1}}});
  b.output("features", DType::F32, dims({1, 72}));
  return b.take();
}

Graph einsum_attention() {
  Builder b("toy_einsum", 17);
  b.input("query", DType::F32, dims({1, 16, 8}));
  b.input("key", DType::F32, dims({1, 4, 8}));
  const auto s = b.op("scores_raw", OpKind::Einsum, {"query", "key"}, {{"equation", std::string("bqc,bkc->bqk")}});
  const auto scale = b.scalar("inv_sqrt_c", static_cast<float>(1.0 / std::sqrt(8.0)));
  const auto scaled = b.op("scores_scaled", OpKind::Mul, {s, scale});
  b.op("attention", OpKind::Softmax, {scaled}, {{"axis", std::int64_t{-1}}});
  b.output("attention", DType::F32, dims({1, 16, 4}));
  return b.take();
}

Graph unrepairable() {
  Builder b("toy_unrepairable", 19);
  b.input("volume", DType::F32, dims({1, 2, 4, 6, 6}));
  b.op("pooled", OpKind::MaxPool3d, {"volume"},
       {{"kernel", std::vector<std::int64_t>{2, 2, 2}},
        {"stride", std::vector<std::int64_t>{2, 2, 2}},
        {"pads", std::vector<std::int64_t>{1, 0, 0}}});
  b.output("pooled", DType::F32, dims({1, 2, 3, 3, 3}));
  return b.take();
}

}  // namespace

std::vector<std::string> zoo_names() {
  return {"toy_conv", "toy_dynamic", "toy_einsum", "toy_lpr", "toy_unrepairable", "toy_yolo", "toy_yolo_int"};
}

Graph zoo_graph(std::string_view name) {
  if (name == "toy_conv") return conv_block("toy_conv", dims({1, 3, 8, 8}), dims({1, 3, 8, 8}));
  if (name == "toy_dynamic") {
    Shape in{Dim::symbol("N"), Dim::fixed(3), Dim::fixed(8), Dim::fixed(8)};
    return conv_block("toy_dynamic", in, in);
  }
  if (name == "toy_yolo") return yolo_head(false);
  if (name == "toy_yolo_int") return yolo_head(true);
  if (name == "toy_lpr") return lpr();
  if (name == "toy_einsum") return einsum_attention();
  if (name == "toy_unrepairable") return unrepairable();
  fail(ErrorCode::ModelLoadFailed, "no bundled model '" + std::string(name) + "'");
}

}  // namespace portir
