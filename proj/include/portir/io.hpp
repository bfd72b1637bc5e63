// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace portir {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_bytes(const fs::path& file);
std::string read_text(const fs::path& file);
/// Creates parent directories as needed. Throws IoError.
void write_bytes(const fs::path& file, std::span<const std::uint8_t> bytes);
void write_text(const fs::path& file, std::string_view text);

/// Writes `content` to a sibling temp file, flushes it to disk, then renames
/// it over `file`. `before_rename` runs between the two steps (crash tests
/// hook it); if it throws, the temp file is left behind and `file` is intact.
void write_file_atomic(const fs::path& file, std::string_view content,
                       const std::function<void()>& before_rename = {});

/// Incremental SHA-256 (OpenSSL EVP).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes);
  Sha256& update(std::string_view text);
  std::string hex_digest();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view text);

/// Current UTC time as ISO-8601 with millisecond precision.
std::string utc_timestamp();

/// Maps an arbitrary tensor name onto a portable file stem.
std::string sanitize_file_stem(std::string_view name);

}  // namespace portir
