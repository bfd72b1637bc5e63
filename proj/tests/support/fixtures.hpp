// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "portir/graph.hpp"
#include "portir/tensor.hpp"

namespace portir::testing {

namespace fs = std::filesystem;

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "portir");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& child) const { return path_ / child; }

 private:
  fs::path path_;
};

/// Sets an environment variable for the lifetime of the object.
class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value);
  ~ScopedEnv();

 private:
  std::string name_;
  std::string old_;
  bool had_ = false;
};

fs::path source_dir();

/// A graph with one node of `op` reading inputs in0..inN (all `dtype`,
/// given shapes) and producing "out".
Graph single_op_graph(OpKind op, DType dtype, const std::vector<StaticShape>& in_shapes, Attributes attrs = {},
                      const StaticShape& out_shape = {});

/// Random valid static graph of F32 tensors with the given number of
/// compute nodes.
Graph random_static_graph(std::mt19937_64& rng, int nodes);

TensorValue random_tensor(std::mt19937_64& rng, DType dtype, const StaticShape& shape, double lo, double hi);

}  // namespace portir::testing
