// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/pipeline.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "portir/error.hpp"
#include "portir/io.hpp"
#include "portir/serialize.hpp"
#include "portir/shape_inference.hpp"
#include "portir/tensor_io.hpp"

namespace portir {

using nlohmann::json;

namespace {

constexpr const char* kConfigFile = "portir.project.json";
constexpr const char* kLedgerFile = "ledger.json";
constexpr const char* kLockFile = ".portir.lock";
constexpr const char* kExportFile = "export/model.pir.json";

std::string sample_dir(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", i);
  return buf;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

json tolerance_to_json(const Tolerance& t) {
  return json{{"atol", t.atol}, {"rtol", t.rtol}, {"denom_floor", t.denom_floor}};
}

[[noreturn]] void config_fail(const std::string& field, const std::string& msg) {
  fail(ErrorCode::ParseError, std::string(kConfigFile) + ": " + field + ": " + msg);
}

Tolerance tolerance_from_json(const json& j, const std::string& path, Tolerance t) {
  if (!j.is_object()) config_fail(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number() || value.get<double>() < 0.0) config_fail(path + "." + key, "expected a non-negative number");
    if (key == "atol") {
      t.atol = value.get<double>();
    } else if (key == "rtol") {
      t.rtol = value.get<double>();
    } else if (key == "denom_floor") {
      t.denom_floor = value.get<double>();
    } else {
      config_fail(path + "." + key, "unknown field");
    }
  }
  return t;
}

json alignment_to_json(const AlignmentReport& r) {
  json outs = json::array();
  for (const auto& o : r.outputs) {
    outs.push_back({{"name", o.name},
                    {"max_abs", o.max_abs},
                    {"max_rel", o.max_rel},
                    {"elements", o.elements},
                    {"violations", o.violations},
                    {"structural", o.structural},
                    {"pass", o.pass}});
  }
  return json{{"pass", r.pass}, {"max_abs", r.max_abs()}, {"max_rel", r.max_rel()}, {"outputs", outs}};
}

json run_profile_to_json(const RunProfile& p, bool with_time) {
  json nodes = json::array();
  for (const auto& n : p.nodes) {
    json j{{"node", n.node_id}, {"op", std::string(op_name(n.op))}, {"elements", n.elements}};
    if (with_time) j["elapsed_ns"] = n.elapsed.count();
    nodes.push_back(j);
  }
  json out{{"nodes", nodes}, {"total_elements", p.total_elements}};
  if (with_time) out["total_elapsed_ns"] = p.total_elapsed.count();
  return out;
}

json read_json(const fs::path& file) {
  try {
    return json::parse(read_text(file));
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, file.string() + ": " + e.what());
  }
}

void write_json(const fs::path& file, const json& doc) { write_file_atomic(file, doc.dump(2) + "\n"); }

bool pid_alive(pid_t pid) { return pid > 0 && (::kill(pid, 0) == 0 || errno == EPERM); }

}  // namespace

std::string_view status_name(StageStatus s) {
  switch (s) {
    case StageStatus::Pending: return "Pending";
    case StageStatus::Passed: return "Passed";
    case StageStatus::Failed: return "Failed";
    case StageStatus::InterventionRequired: return "InterventionRequired";
    case StageStatus::Skipped: return "Skipped";
  }
  return "?";
}

StageStatus parse_status(std::string_view text) {
  for (auto s : {StageStatus::Pending, StageStatus::Passed, StageStatus::Failed, StageStatus::InterventionRequired,
                 StageStatus::Skipped}) {
    if (status_name(s) == text) return s;
  }
  fail(ErrorCode::ParseError, "unknown stage status '" + std::string(text) + "'");
}

std::string_view stage_name(int stage) {
  static constexpr std::string_view names[] = {"baseline", "validate", "build", "align", "quantize", "report"};
  if (stage < 1 || stage > kStageCount) return "?";
  return names[stage - 1];
}

json config_to_json(const ProjectConfig& c) {
  json bindings = json::object();
  for (const auto& [k, v] : c.bindings) bindings[k] = v;
  return json{{"model", c.model},
              {"profile", c.profile},
              {"mode", c.mode ? json(std::string(mode_name(*c.mode))) : json(nullptr)},
              {"bindings", bindings},
              {"seed", c.seed},
              {"retry_bound", c.retry_bound},
              {"baseline_samples", c.baseline_samples},
              {"verify_trials", c.verify_trials},
              {"tolerances",
               {{"validate", tolerance_to_json(c.stage2_tolerance)},
                {"backend", tolerance_to_json(c.backend_tolerance)},
                {"quant", tolerance_to_json(c.quant_tolerance)}}},
              {"quant",
               {{"enabled", c.quant.enabled},
                {"mode", std::string(mode_name(c.quant.mode))},
                {"calibration_samples", c.quant.calibration_samples}}},
              {"kb_path", c.kb_path}};
}

ProjectConfig config_from_json(const json& doc) {
  if (!doc.is_object()) config_fail("<root>", "expected an object");
  ProjectConfig c;
  auto str = [&](const json& obj, const char* key, const std::string& path, std::string& out) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_string()) config_fail(path, "expected a string");
    out = obj[key].get<std::string>();
  };
  auto integer = [&](const json& obj, const char* key, const std::string& path, int& out, int min) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number_integer() || obj[key].get<std::int64_t>() < min || obj[key].get<std::int64_t>() > 1000000) {
      config_fail(path, "expected an integer >= " + std::to_string(min));
    }
    out = obj[key].get<int>();
  };
  auto mode = [&](const json& v, const std::string& path) {
    if (!v.is_string()) config_fail(path, "expected a precision mode string");
    try {
      return parse_mode(v.get<std::string>());
    } catch (const Error& e) {
      config_fail(path, e.detail());
    }
  };
  for (const auto& [key, v] : doc.items()) {
    static const std::set<std::string> known{"model", "profile", "mode", "bindings", "seed", "retry_bound",
                                             "baseline_samples", "verify_trials", "tolerances", "quant", "kb_path"};
    if (!known.contains(key)) config_fail(key, "unknown field");
  }
  str(doc, "model", "model", c.model);
  str(doc, "profile", "profile", c.profile);
  str(doc, "kb_path", "kb_path", c.kb_path);
  if (doc.contains("mode") && !doc["mode"].is_null()) c.mode = mode(doc["mode"], "mode");
  if (doc.contains("bindings")) {
    const auto& b = doc["bindings"];
    if (!b.is_object()) config_fail("bindings", "expected an object");
    for (const auto& [k, v] : b.items()) {
      if (!is_identifier(k)) config_fail("bindings." + k, "not a valid symbol name");
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) config_fail("bindings." + k, "expected a positive integer");
      c.bindings[k] = v.get<std::int64_t>();
    }
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0)) {
      config_fail("seed", "expected a non-negative integer");
    }
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  integer(doc, "retry_bound", "retry_bound", c.retry_bound, 1);
  integer(doc, "baseline_samples", "baseline_samples", c.baseline_samples, 1);
  integer(doc, "verify_trials", "verify_trials", c.verify_trials, 1);
  if (doc.contains("tolerances")) {
    const auto& t = doc["tolerances"];
    if (!t.is_object()) config_fail("tolerances", "expected an object");
    for (const auto& [key, v] : t.items()) {
      if (key == "validate") {
        c.stage2_tolerance = tolerance_from_json(v, "tolerances.validate", c.stage2_tolerance);
      } else if (key == "backend") {
        c.backend_tolerance = tolerance_from_json(v, "tolerances.backend", c.backend_tolerance);
      } else if (key == "quant") {
        c.quant_tolerance = tolerance_from_json(v, "tolerances.quant", c.quant_tolerance);
      } else {
        config_fail("tolerances." + key, "unknown field");
      }
    }
  }
  if (doc.contains("quant")) {
    const auto& q = doc["quant"];
    if (!q.is_object()) config_fail("quant", "expected an object");
    if (q.contains("enabled")) {
      if (!q["enabled"].is_boolean()) config_fail("quant.enabled", "expected a boolean");
      c.quant.enabled = q["enabled"].get<bool>();
    }
    if (q.contains("mode")) c.quant.mode = mode(q["mode"], "quant.mode");
    integer(q, "calibration_samples", "quant.calibration_samples", c.quant.calibration_samples, 0);
  }
  return c;
}

json ledger_to_json(const Ledger& l) {
  json stages = json::array();
  for (int k = 1; k <= kStageCount; ++k) {
    const auto& s = l.stages[static_cast<std::size_t>(k - 1)];
    stages.push_back({{"stage", k},
                      {"name", std::string(stage_name(k))},
                      {"status", std::string(status_name(s.status))},
                      {"started_at", s.started_at},
                      {"finished_at", s.finished_at},
                      {"duration_ms", s.duration_ms},
                      {"message", s.message}});
  }
  json history = json::array();
  for (const auto& e : l.history) {
    history.push_back({{"stage", e.stage}, {"status", std::string(status_name(e.status))}, {"at", e.at}, {"message", e.message}});
  }
  return json{{"source_sha256", l.source_sha256}, {"stages", stages}, {"history", history}};
}

Ledger ledger_from_json(const json& doc) {
  try {
    Ledger l;
    l.source_sha256 = doc.at("source_sha256").get<std::string>();
    const auto& stages = doc.at("stages");
    if (!stages.is_array() || stages.size() != kStageCount) fail(ErrorCode::ParseError, "ledger: expected 6 stages");
    for (std::size_t i = 0; i < stages.size(); ++i) {
      auto& s = l.stages[i];
      s.status = parse_status(stages[i].at("status").get<std::string>());
      s.started_at = stages[i].value("started_at", "");
      s.finished_at = stages[i].value("finished_at", "");
      s.duration_ms = stages[i].value("duration_ms", std::int64_t{0});
      s.message = stages[i].value("message", "");
    }
    for (const auto& e : doc.at("history")) {
      l.history.push_back(LedgerEvent{e.at("stage").get<int>(), parse_status(e.at("status").get<std::string>()),
                                      e.value("at", ""), e.value("message", "")});
    }
    return l;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("ledger: ") + e.what());
  }
}

json attempt_to_json(const RepairAttempt& a) {
  return json{{"signature", a.signature}, {"node", a.node}, {"pass_id", a.pass_id}, {"success", a.success}, {"reason", a.reason}};
}

json intervention_to_json(const InterventionRecord& r) {
  json diags = json::array();
  for (const auto& d : r.unresolved) diags.push_back(diagnostic_to_json(d));
  json attempts = json::array();
  for (const auto& a : r.attempts) attempts.push_back(attempt_to_json(a));
  return json{{"stage", r.stage}, {"unresolved", diags}, {"attempts", attempts}, {"message", r.message}};
}

RepairOutcome repair_graph(const Graph& graph, const CapabilityProfile& profile, const KnowledgeBase& kb,
                           const RepairOptions& options) {
  const auto& registry = options.registry ? *options.registry : pass_registry();
  RepairOutcome out;
  out.graph = graph.value_specs.empty() ? infer_shapes(graph) : graph;
  std::map<std::string, std::set<std::string>> tried;
  std::map<std::string, int> count;

  auto intervene = [&](const std::vector<Diagnostic>& diags, const std::string& message) {
    InterventionRecord rec;
    rec.unresolved = diags;
    rec.attempts = out.attempts;
    rec.message = message;
    out.intervention = std::move(rec);
  };

  for (int iter = 0;; ++iter) {
    const auto diags = check_compatibility(out.graph, profile);
    if (diags.empty()) return out;
    if (iter >= options.max_iterations) {
      intervene(diags, "repair loop stopped after " + std::to_string(iter) + " iterations; manual repair needed");
      return out;
    }
    const Diagnostic& d = diags.front();
    const std::string key = d.signature() + "@" + d.node_id;
    std::vector<std::string> candidates;
    const auto plans = plan_repairs({d}, kb, registry);
    for (const auto& id : plans.front().candidates) {
      if (!tried[key].contains(id)) candidates.push_back(id);
    }
    if (count[key] >= options.retry_bound) {
      intervene(diags, "retry bound " + std::to_string(options.retry_bound) + " reached for " + d.to_string() +
                           "; requires a source-level repair of the model");
      return out;
    }
    if (candidates.empty()) {
      const bool none = tried[key].empty();
      intervene(diags, (none ? "no applicable pass for " : "no applicable pass left for ") + d.to_string() +
                           "; requires a source-level repair of the model");
      return out;
    }
    const std::string& pass_id = candidates.front();
    tried[key].insert(pass_id);
    ++count[key];
    const RewritePass* pass = nullptr;
    for (const auto& p : registry) {
      if (p.id == pass_id) pass = &p;
    }
    RepairAttempt attempt{d.signature(), d.node_id, pass_id, false, {}};
    try {
      auto applied = apply_pass(out.graph, *pass, d, options.context);
      const auto eq = verify_equivalence(out.graph, applied.graph, options.verify);
      const auto before = io_signature(out.graph, options.context.bindings);
      const auto after = io_signature(applied.graph, options.context.bindings);
      const auto recheck = check_compatibility(applied.graph, profile);
      const bool persists = std::any_of(recheck.begin(), recheck.end(), [&](const Diagnostic& r) {
        return r.signature() == d.signature() && r.node_id == d.node_id;
      });
      if (!eq.pass) {
        attempt.reason = "equivalence check failed: " + eq.first_failure;
      } else if (!(before == after)) {
        attempt.reason = "interface changed: " + describe_difference(before, after);
      } else if (persists) {
        attempt.reason = "diagnostic persists after rewrite";
      } else {
        attempt.success = true;
        out.graph = std::move(applied.graph);
        out.receipts.push_back(std::move(applied.receipt));
      }
    } catch (const Error& e) {
      attempt.reason = e.what();
    }
    out.attempts.push_back(std::move(attempt));
  }
}

class Project::Lock {
 public:
  explicit Lock(Project& p) : p_(p) {
    if (p_.lock_depth_++ > 0) return;
    const auto path = p_.root_ / kLockFile;
    for (int attempt = 0; attempt < 2; ++attempt) {
      const int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
      if (fd >= 0) {
        const auto pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
        ::close(fd);
        return;
      }
      pid_t holder = 0;
      try {
        holder = static_cast<pid_t>(std::stol(read_text(path)));
      } catch (...) {
        holder = 0;
      }
      if (pid_alive(holder)) break;
      std::error_code ec;
      fs::remove(path, ec);
    }
    --p_.lock_depth_;
    fail(ErrorCode::ProjectLocked, "project '" + p_.root_.string() + "' is locked by another run (" + path.string() + ")");
  }
  ~Lock() {
    if (--p_.lock_depth_ == 0) {
      std::error_code ec;
      fs::remove(p_.root_ / kLockFile, ec);
    }
  }
  Lock(const Lock&) = delete;
  Lock& operator=(const Lock&) = delete;

 private:
  Project& p_;
};

Project::Project(fs::path root) : root_(std::move(root)) {}

Project Project::init(const fs::path& root, const InitOptions& options) {
  if (fs::exists(root) && (!fs::is_directory(root) || !fs::is_empty(root))) {
    fail(ErrorCode::DirNotEmpty, "'" + root.string() + "' exists and is not empty");
  }
  Graph model;
  try {
    model = load_graph(options.model);
    require_valid(model);
  } catch (const Error& e) {
    fail(ErrorCode::ModelLoadFailed, "cannot load model '" + options.model.string() + "': " + e.what());
  }
  CapabilityProfile profile = resolve_profile(options.profile);
  Project p(root);
  p.config_ = options.config;
  p.config_.model = "model/model.pir.json";
  fs::create_directories(root);
  save_graph(model, root / p.config_.model);
  if (std::find(builtin_profile_names().begin(), builtin_profile_names().end(), options.profile) !=
      builtin_profile_names().end()) {
    p.config_.profile = options.profile;
  } else {
    p.config_.profile = "profile.profile.json";
    write_text(root / p.config_.profile, profile_to_json(profile).dump(2) + "\n");
  }
  write_json(root / kConfigFile, config_to_json(p.config_));
  p.save_ledger();
  return p;
}

Project Project::open(const fs::path& root) {
  if (!fs::exists(root / kConfigFile)) fail(ErrorCode::IoError, "'" + root.string() + "' is not a portir project");
  Project p(root);
  p.config_ = config_from_json(read_json(root / kConfigFile));
  if (fs::exists(root / kLedgerFile)) p.ledger_ = ledger_from_json(read_json(root / kLedgerFile));
  return p;
}

StageStatus Project::status(int stage) const { return ledger_.stages.at(static_cast<std::size_t>(stage - 1)).status; }

void Project::set_config(const ProjectConfig& config) {
  if (config_to_json(config) == config_to_json(config_)) return;
  Lock lock(*this);
  config_from_json(config_to_json(config));
  config_ = config;
  write_json(root_ / kConfigFile, config_to_json(config_));
  const std::string now = utc_timestamp();
  for (int k = 1; k <= kStageCount; ++k) {
    auto& rec = ledger_.stages[static_cast<std::size_t>(k - 1)];
    if (rec.status == StageStatus::Pending) continue;
    rec = StageRecord{};
    ledger_.history.push_back(LedgerEvent{k, StageStatus::Pending, now, "config changed"});
  }
  save_ledger();
}

fs::path Project::kb_path() const {
  if (kb_override_) return *kb_override_;
  if (!config_.kb_path.empty()) return config_.kb_path;
  return default_kb_path();
}

CapabilityProfile Project::profile() const {
  const auto names = builtin_profile_names();
  if (std::find(names.begin(), names.end(), config_.profile) != names.end()) return builtin_profile(config_.profile);
  return resolve_profile((root_ / config_.profile).string());
}

PrecisionMode Project::backend_mode() const {
  if (config_.mode) return *config_.mode;
  const auto p = profile();
  return p.supports(PrecisionMode::FP16) ? PrecisionMode::FP16 : p.precision_modes.front();
}

void Project::save_ledger() const { write_json(root_ / kLedgerFile, ledger_to_json(ledger_)); }

void Project::set_status(int stage, StageStatus status, const std::string& message) {
  const std::string now = utc_timestamp();
  auto& rec = ledger_.stages[static_cast<std::size_t>(stage - 1)];
  rec.status = status;
  rec.message = message;
  ledger_.history.push_back(LedgerEvent{stage, status, now, message});
  for (int k = stage + 1; k <= kStageCount; ++k) {
    auto& later = ledger_.stages[static_cast<std::size_t>(k - 1)];
    if (later.status == StageStatus::Pending) continue;
    later = StageRecord{};
    ledger_.history.push_back(LedgerEvent{k, StageStatus::Pending, now, "reset by stage " + std::to_string(stage)});
  }
  save_ledger();
}

bool Project::check_source() {
  if (ledger_.source_sha256.empty()) return false;
  std::string current;
  try {
    current = graph_file_sha256(model_path());
  } catch (const Error&) {
    current.clear();
  }
  if (current == ledger_.source_sha256) return false;
  const std::string now = utc_timestamp();
  for (int k = 1; k <= kStageCount; ++k) {
    auto& rec = ledger_.stages[static_cast<std::size_t>(k - 1)];
    if (rec.status == StageStatus::Pending) continue;
    rec = StageRecord{};
    ledger_.history.push_back(LedgerEvent{k, StageStatus::Pending, now, "model changed on disk"});
  }
  ledger_.source_sha256.clear();
  save_ledger();
  return true;
}

void Project::require_passed(int stage) const {
  for (int k = 1; k < stage; ++k) {
    const auto s = status(k);
    const bool ok = s == StageStatus::Passed || (k == 5 && s == StageStatus::Skipped);
    if (!ok) {
      fail(ErrorCode::OutOfOrder, "stage " + std::to_string(stage) + " (" + std::string(stage_name(stage)) +
                                      ") needs stage " + std::to_string(k) + " (" + std::string(stage_name(k)) +
                                      ") to pass first; it is " + std::string(status_name(s)));
    }
  }
}

template <typename F>
StageResult Project::guarded(int stage, F&& body) {
  Lock lock(*this);
  check_source();
  require_passed(stage);
  const auto started = utc_timestamp();
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](StageStatus status, const std::string& message) {
    set_status(stage, status, message);
    auto& rec = ledger_.stages[static_cast<std::size_t>(stage - 1)];
    rec.started_at = started;
    rec.finished_at = utc_timestamp();
    rec.duration_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    save_ledger();
  };
  try {
    StageResult r = body();
    r.stage = stage;
    finish(r.status, r.message);
    return r;
  } catch (const Error& e) {
    finish(StageStatus::Failed, e.what());
    throw;
  } catch (const std::exception& e) {
    finish(StageStatus::Failed, e.what());
    throw;
  }
}

Graph Project::execution_graph(const Graph& g) const {
  const auto symbols = graph_symbols(g);
  if (symbols.empty()) return infer_shapes(g);
  std::string missing;
  for (const auto& s : symbols) {
    if (!config_.bindings.contains(s)) missing += (missing.empty() ? "" : ", ") + s;
  }
  if (!missing.empty()) {
    fail(ErrorCode::ShapeUnresolved, "symbolic dims without bindings: " + missing + " (use --bind NAME=INT)");
  }
  return bind_shapes(g, config_.bindings);
}

namespace {

struct Baseline {
  json meta;
  std::vector<TensorList> feeds;
  std::vector<TensorList> outputs;
};

Baseline load_baseline(const fs::path& root) {
  Baseline b;
  const auto dir = root / "baseline";
  int samples = 0;
  try {
    b.meta = read_json(dir / "baseline.json");
    samples = b.meta.at("samples").get<int>();
    for (int i = 0; i < samples; ++i) {
      const auto fdir = dir / "feeds" / sample_dir(i);
      const auto odir = dir / "outputs" / sample_dir(i);
      if (tensors_sha256(fdir) != b.meta.at("feeds_sha256").at(static_cast<std::size_t>(i)).get<std::string>() ||
          tensors_sha256(odir) != b.meta.at("outputs_sha256").at(static_cast<std::size_t>(i)).get<std::string>()) {
        fail(ErrorCode::BaselineCorrupted, "baseline sample " + sample_dir(i) + " does not match its recorded hash");
      }
      b.feeds.push_back(load_tensors(fdir));
      b.outputs.push_back(load_tensors(odir));
    }
    b.meta.at("io_signature");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BaselineCorrupted) throw;
    fail(ErrorCode::BaselineCorrupted, std::string("baseline is unreadable: ") + e.what());
  } catch (const json::exception& e) {
    fail(ErrorCode::BaselineCorrupted, std::string("baseline metadata is malformed: ") + e.what());
  }
  return b;
}

json artifact_summary(const CompiledArtifact& a, const fs::path& root, const fs::path& file) {
  return json{{"file", fs::relative(file, root).generic_string()},
              {"profile", a.profile},
              {"mode", std::string(mode_name(a.mode))},
              {"graph_sha256", a.graph_sha256},
              {"artifact_sha256", a.artifact_sha256()}};
}

CalibrationSet make_calibration(const Graph& g, const ProjectConfig& c, const fs::path& dir) {
  if (c.quant.calibration_samples < 1) fail(ErrorCode::EmptyCalibrationSet, "quant.calibration_samples is 0");
  if (fs::exists(dir)) fs::remove_all(dir);
  CalibrationSet cal;
  for (int i = 0; i < c.quant.calibration_samples; ++i) {
    auto feeds = generate_feeds(g, c.seed, static_cast<std::uint64_t>(c.baseline_samples + i));
    save_tensors(feeds, dir / sample_dir(i));
    cal.push_back(std::move(feeds));
  }
  return cal;
}

}  // namespace

StageResult Project::baseline() {
  return guarded(1, [&] {
    Graph model;
    try {
      model = load_graph(model_path());
      require_valid(model);
    } catch (const Error& e) {
      fail(ErrorCode::ModelLoadFailed, "cannot load model '" + model_path().string() + "': " + e.what());
    }
    const Graph exec = execution_graph(model);
    const Session session(exec);
    const auto dir = root_ / "baseline";
    if (fs::exists(dir)) fs::remove_all(dir);
    json feeds_hash = json::array();
    json outputs_hash = json::array();
    for (int i = 0; i < config_.baseline_samples; ++i) {
      const auto feeds = generate_feeds(exec, config_.seed, static_cast<std::uint64_t>(i));
      const auto outputs = session.run(feeds).outputs;
      save_tensors(feeds, dir / "feeds" / sample_dir(i));
      save_tensors(outputs, dir / "outputs" / sample_dir(i));
      feeds_hash.push_back(tensors_sha256(dir / "feeds" / sample_dir(i)));
      outputs_hash.push_back(tensors_sha256(dir / "outputs" / sample_dir(i)));
    }
    if (fs::exists(root_ / "export")) fs::remove_all(root_ / "export");
    save_graph(model, root_ / kExportFile);
    ledger_.source_sha256 = graph_file_sha256(model_path());

    json bindings = json::object();
    for (const auto& [k, v] : config_.bindings) bindings[k] = v;
    json meta{{"model", model.name},
              {"source_sha256", ledger_.source_sha256},
              {"seed", config_.seed},
              {"samples", config_.baseline_samples},
              {"bindings", bindings},
              {"io_signature", io_signature_to_json(io_signature(model, config_.bindings))},
              {"tolerances",
               {{"validate", tolerance_to_json(config_.stage2_tolerance)},
                {"backend", tolerance_to_json(config_.backend_tolerance)},
                {"quant", tolerance_to_json(config_.quant_tolerance)}}},
              {"feeds_sha256", feeds_hash},
              {"outputs_sha256", outputs_hash}};
    write_json(dir / "baseline.json", meta);
    write_json(root_ / "results" / "stage1.json", meta);
    return StageResult{1, StageStatus::Passed,
                       "recorded " + std::to_string(config_.baseline_samples) + " reference samples", meta};
  });
}

StageResult Project::validate() {
  return guarded(2, [&] {
    const Baseline base = load_baseline(root_);
    json data;
    Graph exported;
    try {
      exported = load_graph(root_ / kExportFile);
    } catch (const Error& e) {
      data = json{{"error", e.what()}};
      write_json(root_ / "results" / "stage2.json", data);
      return StageResult{2, StageStatus::Failed, std::string("exported graph does not load: ") + e.what(), data};
    }
    const auto sig = io_signature_to_json(io_signature(exported, config_.bindings));
    const Session session(execution_graph(exported));
    AlignmentReport total;
    for (std::size_t i = 0; i < base.feeds.size(); ++i) {
      merge_into(total, compare(session.run(base.feeds[i]).outputs, base.outputs[i], config_.stage2_tolerance));
    }
    const bool io_ok = sig == base.meta.at("io_signature");
    data = json{{"alignment", alignment_to_json(total)}, {"io_preserved", io_ok}};
    write_json(root_ / "results" / "stage2.json", data);
    if (!io_ok) return StageResult{2, StageStatus::Failed, "exported interface differs from the baseline", data};
    std::ostringstream msg;
    msg << (total.pass ? "aligned" : "misaligned") << " with baseline (max_abs " << total.max_abs() << ", max_rel "
        << total.max_rel() << ")";
    return StageResult{2, total.pass ? StageStatus::Passed : StageStatus::Failed, msg.str(), data};
  });
}

StageResult Project::build() {
  return guarded(3, [&] {
    const Baseline base = load_baseline(root_);
    const Graph exported = infer_shapes(load_graph(root_ / kExportFile));
    const CapabilityProfile prof = profile();
    const fs::path kb_file = kb_path();
    const KnowledgeBase kb = load_kb(kb_file);

    RepairOptions opts;
    opts.retry_bound = config_.retry_bound;
    opts.context.bindings = config_.bindings;
    opts.verify.trials = config_.verify_trials;
    opts.verify.tol = config_.stage2_tolerance;
    opts.verify.seed = config_.seed;
    opts.verify.bindings = config_.bindings;
    RepairOutcome outcome = repair_graph(exported, prof, kb, opts);

    json deltas = json::array();
    json attempts = json::array();
    for (const auto& a : outcome.attempts) {
      kb_writeback(kb_file, a.signature, a.pass_id, a.success, utc_timestamp());
      deltas.push_back({{"signature", a.signature}, {"pass_id", a.pass_id}, {"success", a.success}});
      attempts.push_back(attempt_to_json(a));
    }
    if (outcome.intervention) {
      json receipts = json::array();
      for (const auto& r : outcome.receipts) receipts.push_back(receipt_to_json(r));
      write_json(root_ / "receipts.json", receipts);
      json data{{"attempts", attempts},
                {"kb_deltas", deltas},
                {"receipts", receipts},
                {"intervention", intervention_to_json(*outcome.intervention)}};
      write_json(root_ / "results" / "stage3.json", data);
      return StageResult{3, StageStatus::InterventionRequired, outcome.intervention->message, data};
    }

    Graph final_graph = outcome.graph;
    if (!graph_symbols(final_graph).empty()) {
      Diagnostic d;
      d.node_id = std::string(kGraphLevel);
      d.kind = DiagnosticKind::DynamicShape;
      PassContext ctx{config_.bindings};
      auto applied = apply_pass(final_graph, *find_pass("bind_shapes"), d, ctx);
      final_graph = std::move(applied.graph);
      outcome.receipts.push_back(std::move(applied.receipt));
    }
    json receipts = json::array();
    json receipts_plain = json::array();
    json sequence = json::array();
    for (const auto& r : outcome.receipts) {
      receipts.push_back(receipt_to_json(r));
      receipts_plain.push_back(receipt_to_json(r, false));
      sequence.push_back(r.pass_id);
    }
    write_json(root_ / "receipts.json", receipts);

    const bool io_ok = io_signature_to_json(io_signature(final_graph)) == base.meta.at("io_signature");
    json data{{"attempts", attempts}, {"kb_deltas", deltas}, {"receipts", receipts_plain}, {"pass_sequence", sequence},
              {"io_preserved", io_ok}};
    if (prof.preserve_io && !io_ok) {
      write_json(root_ / "results" / "stage3.json", data);
      return StageResult{3, StageStatus::Failed, "repaired graph changed the model interface", data};
    }

    const PrecisionMode mode = backend_mode();
    QuantParamMap params;
    if (is_quant_mode(mode)) params = calibrate(final_graph, make_calibration(final_graph, config_, root_ / "calibration"), mode);
    const CompiledArtifact artifact = compile(final_graph, prof, mode, params);
    if (fs::exists(root_ / "artifacts")) fs::remove_all(root_ / "artifacts");
    const auto file = write_artifact(artifact, root_ / "artifacts",
                                     sanitize_file_stem(final_graph.name) + "." + lower(mode_name(mode)));
    data["artifact"] = artifact_summary(artifact, root_, file);
    write_json(root_ / "results" / "stage3.json", data);
    return StageResult{3, StageStatus::Passed,
                       "built " + std::string(mode_name(mode)) + " artifact after " +
                           std::to_string(outcome.receipts.size()) + " pass(es)",
                       data};
  });
}

StageResult Project::align() {
  return guarded(4, [&] {
    const Baseline base = load_baseline(root_);
    const json s3 = read_json(root_ / "results" / "stage3.json");
    const CompiledArtifact artifact = read_artifact(root_ / s3.at("artifact").at("file").get<std::string>());
    const bool io_ok = io_signature_to_json(io_signature(artifact.graph)) == base.meta.at("io_signature");
    AlignmentReport total;
    RunProfile last;
    for (std::size_t i = 0; i < base.feeds.size(); ++i) {
      auto r = run_artifact(artifact, base.feeds[i]);
      merge_into(total, compare(r.outputs, base.outputs[i], config_.backend_tolerance));
      last = std::move(r.profile);
    }
    json data{{"mode", std::string(mode_name(artifact.mode))},
              {"alignment", alignment_to_json(total)},
              {"io_preserved", io_ok},
              {"run_profile", run_profile_to_json(last, false)}};
    write_json(root_ / "results" / "stage4.json", data);
    write_json(root_ / "results" / "stage4.timing.json", run_profile_to_json(last, true));
    if (!io_ok) return StageResult{4, StageStatus::Failed, "artifact interface differs from the baseline", data};
    std::ostringstream msg;
    msg << mode_name(artifact.mode) << (total.pass ? " aligned" : " misaligned") << " (max_abs " << total.max_abs()
        << ", max_rel " << total.max_rel() << ")";
    return StageResult{4, total.pass ? StageStatus::Passed : StageStatus::Failed, msg.str(), data};
  });
}

StageResult Project::quantize() {
  return guarded(5, [&] {
    if (!config_.quant.enabled) {
      json data{{"skipped", true}};
      write_json(root_ / "results" / "stage5.json", data);
      return StageResult{5, StageStatus::Skipped, "quantization disabled in config", data};
    }
    const PrecisionMode mode = config_.quant.mode;
    const CapabilityProfile prof = profile();
    if (!is_quant_mode(mode)) fail(ErrorCode::UnsupportedMode, "quant.mode must be W8A16 or W8A8");
    if (!prof.supports(mode)) {
      fail(ErrorCode::UnsupportedMode, "profile '" + prof.name + "' does not offer " + std::string(mode_name(mode)));
    }
    const Baseline base = load_baseline(root_);
    const json s3 = read_json(root_ / "results" / "stage3.json");
    const Graph graph = read_artifact(root_ / s3.at("artifact").at("file").get<std::string>()).graph;
    const auto cal = make_calibration(graph, config_, root_ / "calibration");
    const QuantParamMap params = calibrate(graph, cal, mode);
    const CompiledArtifact artifact = compile(graph, prof, mode, params);
    const auto file = write_artifact(artifact, root_ / "artifacts", sanitize_file_stem(graph.name) + "." + lower(mode_name(mode)));
    AlignmentReport total;
    RunProfile last;
    for (std::size_t i = 0; i < base.feeds.size(); ++i) {
      auto r = run_quant(artifact, params, base.feeds[i]);
      merge_into(total, compare(r.outputs, base.outputs[i], config_.quant_tolerance));
      last = std::move(r.profile);
    }
    json data{{"mode", std::string(mode_name(mode))},
              {"calibration_samples", config_.quant.calibration_samples},
              {"alignment", alignment_to_json(total)},
              {"artifact", artifact_summary(artifact, root_, file)},
              {"run_profile", run_profile_to_json(last, false)}};
    write_json(root_ / "results" / "stage5.json", data);
    write_json(root_ / "results" / "stage5.timing.json", run_profile_to_json(last, true));
    std::ostringstream msg;
    msg << mode_name(mode) << (total.pass ? " within" : " outside") << " quant tolerance (max_rel " << total.max_rel()
        << ")";
    return StageResult{5, total.pass ? StageStatus::Passed : StageStatus::Failed, msg.str(), data};
  });
}

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string render_markdown(const json& report, const Ledger& ledger, const json& timing) {
  std::ostringstream md;
  md << "# Deployment report: " << report["model"].get<std::string>() << "\n\n";
  md << "Profile `" << report["profile"].get<std::string>() << "`, backend mode `" << report["mode"].get<std::string>()
     << "`.\n\n";
  md << "## Stages\n\n| # | stage | status | started | duration (ms) |\n|---|---|---|---|---|\n";
  for (int k = 1; k <= kStageCount; ++k) {
    const auto& rec = ledger.stages[static_cast<std::size_t>(k - 1)];
    const auto status = report["stages"][static_cast<std::size_t>(k - 1)]["status"].get<std::string>();
    md << "| " << k << " | " << stage_name(k) << " | " << status << " | " << (rec.started_at.empty() ? "-" : rec.started_at)
       << " | " << rec.duration_ms << " |\n";
  }
  md << "\n## Alignment\n\n| check | output | max abs | max rel | violations | pass |\n|---|---|---|---|---|---|\n";
  for (const auto& [check, a] : report["alignment"].items()) {
    if (a.is_null()) continue;
    for (const auto& o : a["outputs"]) {
      md << "| " << check << " | " << o["name"].get<std::string>() << " | "
         << (o["max_abs"].is_null() ? "inf" : fmt_num(o["max_abs"].get<double>())) << " | "
         << (o["max_rel"].is_null() ? "inf" : fmt_num(o["max_rel"].get<double>())) << " | " << o["violations"] << " | "
         << (o["pass"].get<bool>() ? "yes" : "no") << " |\n";
    }
  }
  md << "\n## Repairs\n\n";
  if (report["receipts"].empty()) md << "No graph surgery was needed.\n";
  for (const auto& r : report["receipts"]) {
    md << "- `" << r["pass_id"].get<std::string>() << "` on `" << r["target"].get<std::string>() << "` ("
       << r["signature"].get<std::string>() << "): removed " << r["removed"].size() << " node(s), added "
       << r["added"].size() << "\n";
  }
  md << "\n## Interventions\n\n" << report["interventions"].size() << " intervention(s).\n";
  md << "\n## Knowledge base updates\n\n";
  if (report["kb_deltas"].empty()) md << "None.\n";
  for (const auto& d : report["kb_deltas"]) {
    md << "- " << d["signature"].get<std::string>() << " -> `" << d["pass_id"].get<std::string>() << "` "
       << (d["success"].get<bool>() ? "success" : "failure") << "\n";
  }
  md << "\n## Artifacts\n\n";
  for (const auto& a : report["artifacts"]) {
    md << "- `" << a["file"].get<std::string>() << "` " << a["mode"].get<std::string>() << " sha256 "
       << a["artifact_sha256"].get<std::string>() << "\n";
  }
  md << "\n## Per-node profile (" << report["run_profile"]["mode"].get<std::string>()
     << ")\n\n| node | op | elements | elapsed (us) |\n|---|---|---|---|\n";
  for (const auto& n : timing["nodes"]) {
    md << "| " << n["node"].get<std::string>() << " | " << n["op"].get<std::string>() << " | " << n["elements"] << " | "
       << fmt_num(static_cast<double>(n["elapsed_ns"].get<std::int64_t>()) / 1000.0) << " |\n";
  }
  return md.str();
}

}  // namespace

StageResult Project::report() {
  return guarded(6, [&] {
    const json s1 = read_json(root_ / "results" / "stage1.json");
    const json s2 = read_json(root_ / "results" / "stage2.json");
    const json s3 = read_json(root_ / "results" / "stage3.json");
    const json s4 = read_json(root_ / "results" / "stage4.json");
    const json s5 = read_json(root_ / "results" / "stage5.json");
    const bool quantized = !s5.contains("skipped");

    json stages = json::array();
    for (int k = 1; k <= kStageCount; ++k) {
      const auto s = k == kStageCount ? StageStatus::Passed : status(k);
      stages.push_back({{"stage", k}, {"name", std::string(stage_name(k))}, {"status", std::string(status_name(s))}});
    }
    json artifacts = json::array({s3.at("artifact")});
    if (quantized) artifacts.push_back(s5.at("artifact"));
    const json& run = quantized ? s5 : s4;
    json report{{"format_version", 1},
                {"model", s1.at("model")},
                {"profile", s3.at("artifact").at("profile")},
                {"mode", s4.at("mode")},
                {"stages", stages},
                {"baseline",
                 {{"seed", s1.at("seed")},
                  {"samples", s1.at("samples")},
                  {"io_signature", s1.at("io_signature")},
                  {"outputs_sha256", s1.at("outputs_sha256")}}},
                {"alignment",
                 {{"validate", s2.at("alignment")},
                  {"align", s4.at("alignment")},
                  {"quantize", quantized ? s5.at("alignment") : json(nullptr)}}},
                {"pass_sequence", s3.at("pass_sequence")},
                {"receipts", s3.at("receipts")},
                {"interventions", json::array()},
                {"repair_attempts", s3.at("attempts").size()},
                {"kb_deltas", s3.at("kb_deltas")},
                {"artifacts", artifacts},
                {"run_profile", {{"mode", run.at("mode")}, {"profile", run.at("run_profile")}}}};
    write_json(root_ / "report" / "report.json", report);
    const json timing = read_json(root_ / "results" / (quantized ? "stage5.timing.json" : "stage4.timing.json"));
    write_text(root_ / "report" / "report.md", render_markdown(report, ledger_, timing));
    return StageResult{6, StageStatus::Passed, "report written to report/", report};
  });
}

StageResult Project::run_stage(int stage) {
  switch (stage) {
    case 1: return baseline();
    case 2: return validate();
    case 3: return build();
    case 4: return align();
    case 5: return quantize();
    case 6: return report();
    default: fail(ErrorCode::BadFlag, "no stage " + std::to_string(stage));
  }
}

std::vector<StageResult> Project::run_all() {
  Lock lock(*this);
  check_source();
  std::vector<StageResult> results;
  for (int k = 1; k <= kStageCount; ++k) {
    const auto s = status(k);
    if (s == StageStatus::Passed || s == StageStatus::Skipped) continue;
    try {
      results.push_back(run_stage(k));
    } catch (const Error& e) {
      results.push_back(StageResult{k, StageStatus::Failed, e.what(), json{{"error", std::string(error_code_name(e.code()))}}});
      break;
    }
    const auto st = results.back().status;
    if (st == StageStatus::Failed || st == StageStatus::InterventionRequired) break;
  }
  return results;
}

}  // namespace portir
