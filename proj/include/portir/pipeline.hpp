// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "portir/backend.hpp"
#include "portir/capability.hpp"
#include "portir/interpreter.hpp"
#include "portir/knowledge_base.hpp"
#include "portir/surgery.hpp"

namespace portir {

namespace fs = std::filesystem;

inline constexpr int kStageCount = 6;

enum class StageStatus { Pending, Passed, Failed, InterventionRequired, Skipped };

std::string_view status_name(StageStatus s);
StageStatus parse_status(std::string_view text);
/// 1 baseline, 2 validate, 3 build, 4 align, 5 quantize, 6 report.
std::string_view stage_name(int stage);

struct QuantConfig {
  bool enabled = false;
  PrecisionMode mode = PrecisionMode::W8A8;
  int calibration_samples = 16;
};

struct ProjectConfig {
  /// Relative to the project root.
  std::string model = "model/model.pir.json";
  std::string profile = "qnn-like";
  /// Backend mode for stages 3 and 4; FP16 when offered, else the profile's
  /// first mode.
  std::optional<PrecisionMode> mode;
  Bindings bindings;
  std::uint64_t seed = 42;
  int retry_bound = 3;
  int baseline_samples = 4;
  int verify_trials = 64;
  Tolerance stage2_tolerance{1e-5, 1e-4, 1e-6};
  Tolerance backend_tolerance{1e-3, 1e-2, 1e-6};
  Tolerance quant_tolerance{0.0, 0.05, 1e-6};
  QuantConfig quant;
  /// Empty means PORTIR_KB or ~/.portir/kb.json.
  std::string kb_path;
};

nlohmann::json config_to_json(const ProjectConfig& c);
/// Throws ParseError naming the offending field.
ProjectConfig config_from_json(const nlohmann::json& doc);

struct LedgerEvent {
  int stage = 0;
  StageStatus status = StageStatus::Pending;
  std::string at;
  std::string message;
};

struct StageRecord {
  StageStatus status = StageStatus::Pending;
  std::string started_at;
  std::string finished_at;
  std::int64_t duration_ms = 0;
  std::string message;
};

/// Current status per stage plus the append-only event history.
struct Ledger {
  std::array<StageRecord, kStageCount> stages;
  std::vector<LedgerEvent> history;
  std::string source_sha256;
};

nlohmann::json ledger_to_json(const Ledger& l);
Ledger ledger_from_json(const nlohmann::json& doc);

struct RepairAttempt {
  std::string signature;
  std::string node;
  std::string pass_id;
  bool success = false;
  std::string reason;
};

struct InterventionRecord {
  std::string stage = "build";
  std::vector<Diagnostic> unresolved;
  std::vector<RepairAttempt> attempts;
  std::string message;
};

nlohmann::json attempt_to_json(const RepairAttempt& a);
nlohmann::json intervention_to_json(const InterventionRecord& r);

struct RepairOptions {
  int retry_bound = 3;
  PassContext context;
  EquivalenceOptions verify;
  /// Defaults to pass_registry().
  const std::vector<RewritePass>* registry = nullptr;
  int max_iterations = 64;
};

struct RepairOutcome {
  Graph graph;
  std::vector<PassReceipt> receipts;
  std::vector<RepairAttempt> attempts;
  std::optional<InterventionRecord> intervention;
};

/// The bounded diagnose, plan, apply, verify, re-check loop. Every candidate
/// is tried at most once per diagnostic and at most retry_bound times in
/// total per diagnostic. Pure: the caller persists KB outcomes.
RepairOutcome repair_graph(const Graph& graph, const CapabilityProfile& profile, const KnowledgeBase& kb,
                           const RepairOptions& options);

struct StageResult {
  int stage = 0;
  StageStatus status = StageStatus::Pending;
  std::string message;
  nlohmann::json data;
};

struct InitOptions {
  fs::path model;
  std::string profile = "qnn-like";
  ProjectConfig config;
};

class Project {
 public:
  /// Target dir must be empty or absent (DirNotEmpty). Copies the model into
  /// the project and writes the default config and ledger.
  static Project init(const fs::path& root, const InitOptions& options);
  /// Throws IoError if root is not a project, ParseError on a bad config.
  static Project open(const fs::path& root);

  const fs::path& root() const { return root_; }
  const ProjectConfig& config() const { return config_; }
  const Ledger& ledger() const { return ledger_; }
  StageStatus status(int stage) const;
  /// Persists a new config. When it differs from the current one every
  /// stage is reset to Pending.
  void set_config(const ProjectConfig& config);

  void set_kb_override(fs::path path) { kb_override_ = std::move(path); }
  fs::path kb_path() const;
  fs::path model_path() const { return root_ / config_.model; }
  CapabilityProfile profile() const;
  /// Backend mode used by stages 3 and 4.
  PrecisionMode backend_mode() const;

  /// Resets every stage to Pending when the model file hash differs from
  /// the one recorded at stage 1. Returns true if it reset.
  bool check_source();

  StageResult baseline();
  StageResult validate();
  StageResult build();
  StageResult align();
  StageResult quantize();
  StageResult report();
  StageResult run_stage(int stage);

  /// Runs stages in order from the first one not Passed/Skipped, halting at
  /// the first Failed or InterventionRequired. Errors are recorded as Failed
  /// results rather than thrown.
  std::vector<StageResult> run_all();

 private:
  class Lock;
  explicit Project(fs::path root);
  template <typename F>
  StageResult guarded(int stage, F&& body);
  void require_passed(int stage) const;
  void set_status(int stage, StageStatus status, const std::string& message);
  void save_ledger() const;
  Graph execution_graph(const Graph& g) const;

  fs::path root_;
  ProjectConfig config_;
  Ledger ledger_;
  std::optional<fs::path> kb_override_;
  int lock_depth_ = 0;
};

}  // namespace portir
