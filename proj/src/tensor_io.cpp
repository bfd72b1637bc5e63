// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/tensor_io.hpp"

#include <set>

#include <json.hpp>

#include "portir/error.hpp"

namespace portir {

using nlohmann::json;

namespace {
constexpr const char* kManifest = "tensors.json";
}

void save_tensors(const TensorList& tensors, const fs::path& dir) {
  if (fs::exists(dir)) fs::remove_all(dir);
  fs::create_directories(dir);
  json manifest = json::array();
  std::set<std::string> used;
  for (const auto& [name, t] : tensors) {
    std::string stem = sanitize_file_stem(name);
    for (int i = 1; !used.insert(stem).second; ++i) stem = sanitize_file_stem(name) + "_" + std::to_string(i);
    const auto file = stem + ".bin";
    write_bytes(dir / file, t.to_bytes());
    manifest.push_back({{"name", name}, {"dtype", std::string(dtype_name(t.dtype()))}, {"shape", t.shape()}, {"file", file}});
  }
  write_text(dir / kManifest, manifest.dump(2) + "\n");
}

TensorList load_tensors(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text(dir / kManifest));
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, (dir / kManifest).string() + ": " + e.what());
  }
  if (!manifest.is_array()) fail(ErrorCode::ParseError, (dir / kManifest).string() + ": expected an array");
  TensorList out;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest[i];
    const auto where = (dir / kManifest).string() + "[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("name") || !e.contains("dtype") || !e.contains("shape") || !e.contains("file")) {
      fail(ErrorCode::ParseError, where + ": expected {name,dtype,shape,file}");
    }
    try {
      const auto dtype = parse_dtype(e["dtype"].get<std::string>());
      const auto shape = e["shape"].get<StaticShape>();
      out.emplace_back(e["name"].get<std::string>(),
                       TensorValue::from_bytes(dtype, shape, read_bytes(dir / e["file"].get<std::string>())));
    } catch (const json::exception& ex) {
      fail(ErrorCode::ParseError, where + ": " + ex.what());
    } catch (const Error& ex) {
      fail(ErrorCode::ParseError, where + ": " + ex.detail());
    }
  }
  return out;
}

std::string tensors_sha256(const fs::path& dir) {
  const auto text = read_text(dir / kManifest);
  Sha256 h;
  h.update(text);
  for (const auto& e : json::parse(text)) {
    const auto file = e.at("file").get<std::string>();
    h.update(file).update(read_bytes(dir / file));
  }
  return h.hex_digest();
}

}  // namespace portir
