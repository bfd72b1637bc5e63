// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <optional>
#include <string>
#include <vector>

#include "portir/error.hpp"
#include "portir/io.hpp"
#include "portir/pipeline.hpp"
#include "portir/serialize.hpp"
#include "portir/shape_inference.hpp"

namespace portir {

using nlohmann::json;

namespace {

struct Overrides {
  std::optional<std::string> mode;
  std::vector<std::string> binds;
  std::optional<std::uint64_t> seed;
  std::optional<int> retry_bound;
  std::optional<int> samples;
  std::optional<int> verify_trials;
  std::optional<double> validate_atol, validate_rtol;
  std::optional<double> backend_atol, backend_rtol;
  std::optional<double> quant_atol, quant_rtol;
  bool skip_quant = false;
  std::optional<std::string> quant_mode;
  std::optional<int> calibration_samples;

  bool any() const {
    return mode || !binds.empty() || seed || retry_bound || samples || verify_trials || validate_atol || validate_rtol ||
           backend_atol || backend_rtol || quant_atol || quant_rtol || skip_quant || quant_mode || calibration_samples;
  }
};

struct Common {
  std::string dir = ".";
  std::string kb;
  bool json_out = false;
  int verbose = 0;
  bool quiet = false;
  bool force = false;
};

[[noreturn]] void bad_flag(const std::string& msg) { fail(ErrorCode::BadFlag, msg); }

PrecisionMode flag_mode(const std::string& flag, const std::string& text) {
  try {
    return parse_mode(text);
  } catch (const Error&) {
    bad_flag(flag + ": unknown precision mode '" + text + "' (expected FP16, W8A16 or W8A8)");
  }
}

Bindings parse_bindings(const std::vector<std::string>& binds) {
  Bindings out;
  for (const auto& b : binds) {
    const auto eq = b.find('=');
    if (eq == std::string::npos) bad_flag("--bind: expected NAME=INT, got '" + b + "'");
    const std::string name = b.substr(0, eq);
    const std::string value = b.substr(eq + 1);
    if (!is_identifier(name)) bad_flag("--bind: '" + name + "' is not a valid symbol name");
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size() || v < 1) {
      bad_flag("--bind: value for '" + name + "' must be a positive integer, got '" + value + "'");
    }
    out[name] = v;
  }
  return out;
}

ProjectConfig apply(const Overrides& o, ProjectConfig c) {
  if (o.mode) c.mode = flag_mode("--mode", *o.mode);
  for (const auto& [k, v] : parse_bindings(o.binds)) c.bindings[k] = v;
  if (o.seed) c.seed = *o.seed;
  if (o.retry_bound) c.retry_bound = *o.retry_bound;
  if (o.samples) c.baseline_samples = *o.samples;
  if (o.verify_trials) c.verify_trials = *o.verify_trials;
  if (o.validate_atol) c.stage2_tolerance.atol = *o.validate_atol;
  if (o.validate_rtol) c.stage2_tolerance.rtol = *o.validate_rtol;
  if (o.backend_atol) c.backend_tolerance.atol = *o.backend_atol;
  if (o.backend_rtol) c.backend_tolerance.rtol = *o.backend_rtol;
  if (o.quant_atol) c.quant_tolerance.atol = *o.quant_atol;
  if (o.quant_rtol) c.quant_tolerance.rtol = *o.quant_rtol;
  if (o.skip_quant) c.quant.enabled = false;
  if (o.quant_mode) {
    c.quant.mode = flag_mode("--quant", *o.quant_mode);
    if (!is_quant_mode(c.quant.mode)) bad_flag("--quant: mode must be W8A16 or W8A8");
    c.quant.enabled = true;
  }
  if (o.calibration_samples) c.quant.calibration_samples = *o.calibration_samples;
  return c;
}

void add_common(CLI::App* app, Common& c, bool with_dir = true) {
  if (with_dir) app->add_option("dir,--project", c.dir, "Project directory")->capture_default_str();
  app->add_flag("--json", c.json_out, "Emit the structured result as JSON");
  app->add_flag("-v,--verbose", c.verbose, "More detail (repeatable)");
  app->add_flag("-q,--quiet", c.quiet, "Only report errors");
}

void add_overrides(CLI::App* app, Overrides& o) {
  const std::string g = "Configuration";
  app->add_option("--mode", o.mode, "Backend precision mode for build/run (FP16, W8A16, W8A8)")->group(g);
  app->add_option("--bind", o.binds, "Bind a symbolic dimension, NAME=INT (repeatable)")->group(g);
  app->add_option("--seed", o.seed, "Seed for generated feeds")->group(g);
  app->add_option("--retry-bound", o.retry_bound, "Repair attempts per diagnostic")->check(CLI::PositiveNumber)->group(g);
  app->add_option("--samples", o.samples, "Baseline sample count")->check(CLI::PositiveNumber)->group(g);
  app->add_option("--verify-trials", o.verify_trials, "Equivalence trials per rewrite")->check(CLI::PositiveNumber)->group(g);
  app->add_option("--validate-atol", o.validate_atol)->check(CLI::NonNegativeNumber)->group(g);
  app->add_option("--validate-rtol", o.validate_rtol)->check(CLI::NonNegativeNumber)->group(g);
  app->add_option("--backend-atol", o.backend_atol)->check(CLI::NonNegativeNumber)->group(g);
  app->add_option("--backend-rtol", o.backend_rtol)->check(CLI::NonNegativeNumber)->group(g);
  app->add_option("--quant-atol", o.quant_atol)->check(CLI::NonNegativeNumber)->group(g);
  app->add_option("--quant-rtol", o.quant_rtol)->check(CLI::NonNegativeNumber)->group(g);
  auto* skip = app->add_flag("--skip-quant", o.skip_quant, "Disable the quantization stage")->group(g);
  app->add_option("--quant", o.quant_mode, "Enable the quantization stage with W8A16 or W8A8")->excludes(skip)->group(g);
  app->add_option("--calibration-samples", o.calibration_samples)->check(CLI::NonNegativeNumber)->group(g);
}

json stage_json(const StageResult& r) {
  return json{{"stage", r.stage},
              {"name", std::string(stage_name(r.stage))},
              {"status", std::string(status_name(r.status))},
              {"message", r.message},
              {"data", r.data}};
}

int exit_code(StageStatus s) {
  switch (s) {
    case StageStatus::Failed: return kExitFailed;
    case StageStatus::InterventionRequired: return kExitIntervention;
    default: return kExitOk;
  }
}

std::string num(const json& v) {
  if (v.is_null()) return "inf";
  std::ostringstream os;
  os << v.get<double>();
  return os.str();
}

void print_alignment(std::ostream& out, const json& alignment) {
  out << "    output            max_abs       max_rel       violations  pass\n";
  for (const auto& o : alignment["outputs"]) {
    char line[160];
    std::snprintf(line, sizeof(line), "    %-16s  %-12s  %-12s  %-10lld  %s", o["name"].get<std::string>().c_str(),
                  num(o["max_abs"]).c_str(), num(o["max_rel"]).c_str(),
                  static_cast<long long>(o["violations"].get<std::int64_t>()), o["pass"].get<bool>() ? "yes" : "no");
    out << line;
    if (!o["structural"].get<std::string>().empty()) out << "  (" << o["structural"].get<std::string>() << ")";
    out << "\n";
  }
}

void print_stage(std::ostream& out, const StageResult& r, const Common& c, bool cached) {
  if (c.quiet) return;
  out << "stage " << r.stage << " (" << stage_name(r.stage) << "): " << status_name(r.status)
      << (cached ? " (already done)" : "") << "\n";
  if (!r.message.empty()) out << "  " << r.message << "\n";
  const json& d = r.data;
  if (r.status == StageStatus::InterventionRequired && d.contains("intervention")) {
    out << "  unresolved:\n";
    for (const auto& u : d["intervention"]["unresolved"]) {
      out << "    " << u.value("signature", "") << " at " << u.value("node", "") << ": " << u.value("detail", "") << "\n";
    }
  }
  if (d.contains("attempts") && (c.verbose > 0 || r.status != StageStatus::Passed)) {
    for (const auto& a : d["attempts"]) {
      out << "  attempt " << a["pass_id"].get<std::string>() << " on " << a["node"].get<std::string>() << ": "
          << (a["success"].get<bool>() ? "ok" : "failed: " + a["reason"].get<std::string>()) << "\n";
    }
  }
  if (d.contains("pass_sequence") && !d["pass_sequence"].empty()) {
    out << "  passes:";
    for (const auto& p : d["pass_sequence"]) out << " " << p.get<std::string>();
    out << "\n";
  }
  if (d.contains("alignment") && d["alignment"].contains("outputs") && (c.verbose > 0 || r.status == StageStatus::Failed)) print_alignment(out, d["alignment"]);
  if (c.verbose > 1) out << d.dump(2) << "\n";
}

std::optional<StageResult> stored_result(const Project& p, int stage) {
  const auto s = p.status(stage);
  if (s != StageStatus::Passed && s != StageStatus::Skipped) return std::nullopt;
  const auto file = stage == kStageCount ? p.root() / "report" / "report.json"
                                         : p.root() / "results" / ("stage" + std::to_string(stage) + ".json");
  json data;
  try {
    data = json::parse(read_text(file));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return StageResult{stage, s, p.ledger().stages[static_cast<std::size_t>(stage - 1)].message, data};
}

Project open_project(const Common& c, const Overrides* o) {
  std::optional<ProjectConfig> next;
  Project p = Project::open(c.dir);
  if (o && o->any()) next = apply(*o, p.config());
  if (!c.kb.empty()) p.set_kb_override(c.kb);
  if (next) p.set_config(*next);
  return p;
}

int cmd_stage(int stage, const Common& c, const Overrides& o, std::ostream& out) {
  Project p = open_project(c, &o);
  p.check_source();
  std::optional<StageResult> r;
  bool cached = false;
  if (!c.force) {
    r = stored_result(p, stage);
    cached = r.has_value();
  }
  if (!r) r = p.run_stage(stage);
  if (c.json_out) {
    out << stage_json(*r).dump(2) << "\n";
  } else {
    print_stage(out, *r, c, cached);
  }
  return exit_code(r->status);
}

json stages_json(const Project& p) {
  json stages = json::array();
  for (int k = 1; k <= kStageCount; ++k) {
    const auto& rec = p.ledger().stages[static_cast<std::size_t>(k - 1)];
    stages.push_back({{"stage", k},
                      {"name", std::string(stage_name(k))},
                      {"status", std::string(status_name(rec.status))},
                      {"message", rec.message}});
  }
  return stages;
}

int cmd_run_all(const Common& c, const Overrides& o, std::ostream& out) {
  Project p = open_project(c, &o);
  const auto results = p.run_all();
  int code = kExitOk;
  if (!results.empty()) code = exit_code(results.back().status);
  if (c.json_out) {
    json rs = json::array();
    for (const auto& r : results) rs.push_back(stage_json(r));
    out << json{{"results", rs}, {"stages", stages_json(p)}}.dump(2) << "\n";
  } else if (!c.quiet) {
    if (results.empty()) out << "all stages already done; nothing to run\n";
    for (const auto& r : results) print_stage(out, r, c, false);
    if (code == kExitIntervention) out << "manual intervention required; see results/stage3.json\n";
  }
  return code;
}

int cmd_init(const std::string& dir, const std::string& model, const std::string& profile, const Common& c,
             const Overrides& o, std::ostream& out) {
  InitOptions opts;
  opts.model = model;
  opts.profile = profile;
  opts.config = apply(o, ProjectConfig{});
  if (opts.config.mode && !resolve_profile(profile).supports(*opts.config.mode)) {
    bad_flag("--mode: profile '" + profile + "' does not offer " + std::string(mode_name(*opts.config.mode)));
  }
  if (!c.kb.empty()) opts.config.kb_path = fs::absolute(c.kb).string();
  Project p = Project::init(dir, opts);
  if (c.json_out) {
    out << json{{"project", dir}, {"profile", p.config().profile}, {"config", config_to_json(p.config())}}.dump(2)
        << "\n";
  } else if (!c.quiet) {
    out << "created project '" << dir << "' (profile " << p.config().profile << ")\n";
  }
  return kExitOk;
}

int cmd_show_config(const Common& c, std::ostream& out) {
  Project p = open_project(c, nullptr);
  if (c.json_out) {
    out << json{{"config", config_to_json(p.config())}, {"stages", stages_json(p)}}.dump(2) << "\n";
    return kExitOk;
  }
  out << config_to_json(p.config()).dump(2) << "\n";
  out << "kb: " << p.kb_path().string() << "\n";
  for (int k = 1; k <= kStageCount; ++k) {
    const auto& rec = p.ledger().stages[static_cast<std::size_t>(k - 1)];
    out << "  " << k << " " << stage_name(k) << ": " << status_name(rec.status);
    if (!rec.message.empty()) out << " - " << rec.message;
    out << "\n";
  }
  return kExitOk;
}

int cmd_check(const Common& c, const std::string& model, const std::string& profile_name, std::ostream& out) {
  Graph g;
  CapabilityProfile profile;
  fs::path kb_file = c.kb.empty() ? default_kb_path() : fs::path(c.kb);
  if (!model.empty()) {
    g = load_graph(model);
    profile = resolve_profile(profile_name.empty() ? "qnn-like" : profile_name);
  } else {
    Project p = open_project(c, nullptr);
    const auto exported = p.root() / "export" / "model.pir.json";
    g = load_graph(fs::exists(exported) ? exported : p.model_path());
    profile = profile_name.empty() ? p.profile() : resolve_profile(profile_name);
    kb_file = p.kb_path();
  }
  require_valid(g);
  const auto diags = check_compatibility(infer_shapes(g), profile);
  const auto plans = plan_repairs(diags, load_kb(kb_file), pass_registry());
  if (c.json_out) {
    json list = json::array();
    for (const auto& plan : plans) {
      json d = diagnostic_to_json(plan.diagnostic);
      d["candidates"] = plan.candidates;
      list.push_back(d);
    }
    out << json{{"model", g.name}, {"profile", profile.name}, {"compatible", diags.empty()}, {"diagnostics", list}}.dump(2)
        << "\n";
  } else if (!c.quiet) {
    if (diags.empty()) {
      out << "'" << g.name << "' is compatible with profile '" << profile.name << "'\n";
    } else {
      out << diags.size() << " diagnostic(s) for '" << g.name << "' against profile '" << profile.name << "':\n";
      for (const auto& plan : plans) {
        out << "  " << plan.diagnostic.to_string() << " [" << plan.diagnostic.signature()
            << "]\n    candidate passes: ";
        if (plan.candidates.empty()) out << "(none; manual repair needed)";
        for (std::size_t i = 0; i < plan.candidates.size(); ++i) out << (i ? ", " : "") << plan.candidates[i];
        out << "\n";
      }
    }
  }
  return diags.empty() ? kExitOk : kExitFailed;
}

int cmd_kb(const Common& c, const std::string& signature, std::ostream& out) {
  const fs::path file = c.kb.empty() ? default_kb_path() : fs::path(c.kb);
  const KnowledgeBase kb = load_kb(file);
  if (!signature.empty()) {
    const auto passes = kb.query(signature);
    if (c.json_out) {
      out << json{{"signature", signature}, {"passes", passes}}.dump(2) << "\n";
    } else {
      for (const auto& e : kb.entries(signature)) {
        out << e.pass_id << "  successes " << e.successes << "  failures " << e.failures << "\n";
      }
    }
    return kExitOk;
  }
  if (c.json_out) {
    out << kb.to_json().dump(2) << "\n";
  } else {
    out << "knowledge base " << file.string() << (kb.empty() ? " (empty)" : "") << "\n";
    for (const auto& [sig, entries] : kb.all()) {
      out << "  " << sig << "\n";
      for (const auto& e : entries) {
        out << "    " << e.pass_id << "  successes " << e.successes << "  failures " << e.failures << "\n";
      }
    }
  }
  return kExitOk;
}

void report_error(std::ostream& err, const Common& c, std::ostream& out, const Error& e) {
  if (c.json_out) {
    out << json{{"error", std::string(error_code_name(e.code()))}, {"detail", e.detail()}}.dump(2) << "\n";
  }
  err << "error: " << e.what() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"portir: staged model deployment against target capability profiles", "portir"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Common common;
  Overrides overrides;
  std::string model;
  std::string profile;
  std::string signature;
  std::function<int()> action;

  auto* init = app.add_subcommand("init", "Create a project from a model file");
  init->add_option("dir,--project", common.dir, "Project directory to create")->required();
  init->add_option("--model", model, "Model graph (.pir.json)")->required();
  init->add_option("--profile", profile, "Built-in profile name or .profile.json path")->default_val("qnn-like");
  init->add_option("--kb", common.kb, "Knowledge base file recorded in the config");
  add_common(init, common, false);
  add_overrides(init, overrides);
  init->callback([&] { action = [&] { return cmd_init(common.dir, model, profile, common, overrides, out); }; });

  auto* show = app.add_subcommand("show-config", "Print the project config and stage status");
  add_common(show, common);
  show->callback([&] { action = [&] { return cmd_show_config(common, out); }; });

  auto* check = app.add_subcommand("check", "List capability diagnostics with candidate passes");
  add_common(check, common);
  check->add_option("--model", model, "Check a model file instead of a project");
  check->add_option("--profile", profile, "Profile to check against");
  check->add_option("--kb", common.kb, "Knowledge base file");
  check->callback([&] { action = [&] { return cmd_check(common, model, profile, out); }; });

  struct StageCommand {
    const char* name;
    int stage;
    const char* help;
  };
  const StageCommand stages[] = {
      {"baseline", 1, "Stage 1: record reference feeds and outputs"},
      {"validate", 2, "Stage 2: reload the export and check it against the baseline"},
      {"build", 3, "Stage 3: repair the graph and compile the target artifact"},
      {"run", 4, "Stage 4: run the artifact and compare against the baseline"},
      {"quantize", 5, "Stage 5: calibrate, quantize and compare"},
      {"report", 6, "Stage 6: write report.md and report.json"},
  };
  for (const auto& s : stages) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, common);
    add_overrides(sub, overrides);
    sub->add_option("--kb", common.kb, "Knowledge base file (overrides PORTIR_KB and the config)");
    sub->add_flag("--force", common.force, "Rerun even if the stage already passed");
    const int k = s.stage;
    sub->callback([&, k] { action = [&, k] { return cmd_stage(k, common, overrides, out); }; });
  }
  app.get_subcommand("run")->alias("align");

  auto* all = app.add_subcommand("run-all", "Run every pending stage in order");
  add_common(all, common);
  add_overrides(all, overrides);
  all->add_option("--kb", common.kb, "Knowledge base file (overrides PORTIR_KB and the config)");
  all->callback([&] { action = [&] { return cmd_run_all(common, overrides, out); }; });

  auto* kb = app.add_subcommand("kb", "Show knowledge base contents");
  kb->add_option("--kb", common.kb, "Knowledge base file");
  kb->add_option("--signature", signature, "Only this signature, in recommendation order");
  kb->add_flag("--json", common.json_out);
  kb->callback([&] { action = [&] { return cmd_kb(common, signature, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.back()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "BadFlag: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.back()->help());
    return kExitUsage;
  }

  try {
    return action();
  } catch (const Error& e) {
    report_error(err, common, out, e);
    return e.code() == ErrorCode::BadFlag ? kExitUsage : kExitFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}

}  // namespace portir
