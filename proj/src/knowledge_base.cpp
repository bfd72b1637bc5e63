// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/knowledge_base.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>

#include "portir/error.hpp"
#include "portir/io.hpp"

namespace portir {

using nlohmann::json;

std::vector<KbEntry> KnowledgeBase::entries(const std::string& signature) const {
  auto it = entries_.find(signature);
  if (it == entries_.end()) return {};
  auto list = it->second;
  std::sort(list.begin(), list.end(), [](const KbEntry& a, const KbEntry& b) {
    if (a.successes != b.successes) return a.successes > b.successes;
    if (a.failures != b.failures) return a.failures < b.failures;
    return a.pass_id < b.pass_id;
  });
  return list;
}

std::vector<std::string> KnowledgeBase::query(const std::string& signature) const {
  std::vector<std::string> ids;
  for (const auto& e : entries(signature)) ids.push_back(e.pass_id);
  return ids;
}

void KnowledgeBase::record(const std::string& signature, const std::string& pass_id, bool success,
                           const std::string& when) {
  auto& list = entries_[signature];
  auto it = std::find_if(list.begin(), list.end(), [&](const KbEntry& e) { return e.pass_id == pass_id; });
  if (it == list.end()) {
    list.push_back(KbEntry{pass_id, 0, 0, {}});
    it = list.end() - 1;
  }
  (success ? it->successes : it->failures) += 1;
  it->last_used = when;
  std::sort(list.begin(), list.end(), [](const KbEntry& a, const KbEntry& b) { return a.pass_id < b.pass_id; });
}

json KnowledgeBase::to_json() const {
  json entries = json::object();
  for (const auto& [sig, list] : entries_) {
    json arr = json::array();
    for (const auto& e : list) {
      arr.push_back({{"pass_id", e.pass_id}, {"successes", e.successes}, {"failures", e.failures}, {"last_used", e.last_used}});
    }
    entries[sig] = arr;
  }
  return json{{"version", 1}, {"entries", entries}};
}

namespace {

[[noreturn]] void corrupt(const std::string& msg) {
  fail(ErrorCode::CorruptKnowledgeBase, msg + "; repair or delete the file to re-initialize");
}

}  // namespace

KnowledgeBase KnowledgeBase::from_json(const json& doc) {
  if (!doc.is_object()) corrupt("root is not an object");
  if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<std::int64_t>() != 1) {
    corrupt("missing or unsupported version");
  }
  if (!doc.contains("entries") || !doc["entries"].is_object()) corrupt("missing entries object");
  KnowledgeBase kb;
  for (const auto& [sig, arr] : doc["entries"].items()) {
    if (!arr.is_array()) corrupt("entries['" + sig + "'] is not an array");
    std::vector<KbEntry> list;
    for (const auto& e : arr) {
      if (!e.is_object()) corrupt("entry under '" + sig + "' is not an object");
      for (const char* key : {"pass_id", "last_used"}) {
        if (!e.contains(key) || !e[key].is_string()) corrupt("entry under '" + sig + "' lacks string " + key);
      }
      for (const char* key : {"successes", "failures"}) {
        if (!e.contains(key) || !e[key].is_number_integer() || e[key].get<std::int64_t>() < 0) {
          corrupt("entry under '" + sig + "' lacks non-negative " + key);
        }
      }
      KbEntry k{e["pass_id"].get<std::string>(), e["successes"].get<std::int64_t>(), e["failures"].get<std::int64_t>(),
                e["last_used"].get<std::string>()};
      if (std::any_of(list.begin(), list.end(), [&](const KbEntry& x) { return x.pass_id == k.pass_id; })) {
        corrupt("duplicate pass '" + k.pass_id + "' under '" + sig + "'");
      }
      list.push_back(std::move(k));
    }
    std::sort(list.begin(), list.end(), [](const KbEntry& a, const KbEntry& b) { return a.pass_id < b.pass_id; });
    kb.entries_[sig] = std::move(list);
  }
  return kb;
}

KnowledgeBase load_kb(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) return {};
  std::string text;
  try {
    text = read_text(file);
  } catch (const Error& e) {
    corrupt("cannot read '" + file.string() + "': " + e.detail());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    corrupt("'" + file.string() + "' is not valid JSON");
  }
  return KnowledgeBase::from_json(doc);
}

namespace {

class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    const auto lock_path = file.string() + ".lock";
    fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) fail(ErrorCode::IoError, "cannot open lock '" + lock_path + "'");
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      fail(ErrorCode::IoError, "cannot lock '" + lock_path + "'");
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& file, const std::function<void()>& before_rename) {
  FileLock lock(file);
  write_file_atomic(file, kb.to_json().dump(2) + "\n", before_rename);
}

KnowledgeBase kb_writeback(const std::filesystem::path& file, const std::string& signature, const std::string& pass_id,
                           bool success, const std::string& when) {
  FileLock lock(file);
  KnowledgeBase kb = load_kb(file);
  kb.record(signature, pass_id, success, when);
  write_file_atomic(file, kb.to_json().dump(2) + "\n");
  return kb;
}

std::filesystem::path default_kb_path() {
  if (const char* env = std::getenv("PORTIR_KB"); env && *env) return env;
  const char* home = std::getenv("HOME");
  return std::filesystem::path(home ? home : ".") / ".portir" / "kb.json";
}

}  // namespace portir
