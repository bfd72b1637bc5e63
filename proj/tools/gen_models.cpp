// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

// Writes every bundled model to <out>/<name>/model.pir.json.

#include <filesystem>
#include <iostream>

#include "portir/error.hpp"
#include "portir/serialize.hpp"
#include "portir/zoo.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_models OUT_DIR\n";
    return 2;
  }
  const std::filesystem::path out = argv[1];
  try {
    for (const auto& name : portir::zoo_names()) {
      const auto file = out / name / "model.pir.json";
      if (std::filesystem::exists(out / name)) std::filesystem::remove_all(out / name);
      portir::save_graph(portir::zoo_graph(name), file);
      std::cout << file.string() << "\n";
    }
  } catch (const portir::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
