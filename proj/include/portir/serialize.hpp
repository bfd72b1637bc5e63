// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "portir/graph.hpp"
#include "portir/io.hpp"

namespace portir {

inline constexpr int kGraphFormatVersion = 1;

/// A `*.pir.json` document plus the raw constant blobs it references by
/// relative path.
struct SerializedGraph {
  std::string document;
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> blobs;
};

/// Deterministic: identical graphs yield identical bytes. Blob paths are
/// `<blob_dir>/<constant>.bin`. Throws InvalidGraph on malformed input.
SerializedGraph serialize(const Graph& graph, std::string_view blob_dir = "constants");

using BlobLoader = std::function<std::vector<std::uint8_t>(const std::string& relative_path)>;

/// Throws ParseError (with line or field context) or VersionError.
Graph deserialize(std::string_view document, const BlobLoader& load_blob);

/// Writes `file` and its blobs into `<stem>.constants/` next to it.
void save_graph(const Graph& graph, const fs::path& file);
Graph load_graph(const fs::path& file);

/// SHA-256 over the canonical serialization (document and blobs).
std::string graph_sha256(const Graph& graph);

/// Hash of the raw on-disk bytes of a graph file and every blob it names.
std::string graph_file_sha256(const fs::path& file);

}  // namespace portir
