// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace portir {

struct KbEntry {
  std::string pass_id;
  std::int64_t successes = 0;
  std::int64_t failures = 0;
  std::string last_used;

  friend bool operator==(const KbEntry&, const KbEntry&) = default;
};

/// Failure signature -> repair outcome statistics.
class KnowledgeBase {
 public:
  /// Entries ordered by successes desc, failures asc, pass_id.
  std::vector<KbEntry> entries(const std::string& signature) const;
  std::vector<std::string> query(const std::string& signature) const;
  void record(const std::string& signature, const std::string& pass_id, bool success, const std::string& when);

  const std::map<std::string, std::vector<KbEntry>>& all() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  nlohmann::json to_json() const;
  /// Throws CorruptKnowledgeBase on any schema violation.
  static KnowledgeBase from_json(const nlohmann::json& doc);

  friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;

 private:
  std::map<std::string, std::vector<KbEntry>> entries_;
};

/// A missing file is an empty KB; an unreadable or malformed one throws
/// CorruptKnowledgeBase.
KnowledgeBase load_kb(const std::filesystem::path& file);

/// Atomic write (temp file + rename) under an exclusive advisory lock.
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& file,
             const std::function<void()>& before_rename = {});

/// Reloads the file under lock, records the outcome and saves it back.
KnowledgeBase kb_writeback(const std::filesystem::path& file, const std::string& signature,
                           const std::string& pass_id, bool success, const std::string& when);

/// PORTIR_KB, else ~/.portir/kb.json.
std::filesystem::path default_kb_path();

}  // namespace portir
