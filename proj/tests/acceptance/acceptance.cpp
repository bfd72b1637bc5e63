// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

// Scenario-level acceptance checks. Prints one PASS/FAIL line per criterion
// and exits nonzero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "op_cases.hpp"
#include "oracles.hpp"
#include "portir/backend.hpp"
#include "portir/error.hpp"
#include "portir/half.hpp"
#include "portir/io.hpp"
#include "portir/pipeline.hpp"
#include "portir/serialize.hpp"
#include "portir/shape_inference.hpp"
#include "portir/zoo.hpp"
#include "rewrite_cases.hpp"

namespace portir {
namespace {

using nlohmann::json;
using testing::TempDir;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed check; only the first message is kept.
  bool check(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail.str("");
      detail << what;
    }
    return ok;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path model_file(const std::string& name) { return testing::source_dir() / "models" / name / "model.pir.json"; }

Project make_project(const fs::path& root, const std::string& model, const fs::path& kb,
                     const std::function<void(ProjectConfig&)>& tweak = {}, const std::string& profile = "qnn-like") {
  InitOptions opts;
  opts.model = model_file(model);
  opts.profile = profile;
  if (model == "toy_dynamic") opts.config.bindings["N"] = 2;
  if (tweak) tweak(opts.config);
  Project p = Project::init(root, opts);
  p.set_kb_override(kb);
  return p;
}

json read_json_file(const fs::path& f) { return json::parse(read_text(f)); }

std::vector<std::string> pass_sequence(const fs::path& root) {
  return read_json_file(root / "results" / "stage3.json").at("pass_sequence").get<std::vector<std::string>>();
}

std::string join(const std::vector<std::string>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s + "]";
}

bool all_done(const Project& p) {
  for (int k = 1; k <= kStageCount; ++k) {
    const auto s = p.status(k);
    if (s != StageStatus::Passed && !(k == 5 && s == StageStatus::Skipped)) return false;
  }
  return true;
}

// 1. Randomized equivalence of every node-level rewrite.
void rewrite_equivalence(Outcome& o) {
  constexpr int kCases = 500;
  const auto t0 = Clock::now();
  int total = 0;
  for (const auto& id : testing::rewrite_pass_ids()) {
    const RewritePass* pass = find_pass(id);
    if (!o.check(pass != nullptr, "unknown pass " + id)) return;
    std::mt19937_64 rng(std::hash<std::string>{}(id) ^ 0xacce97);
    double worst_rel = 0.0;
    for (int i = 0; i < kCases; ++i) {
      const auto c = testing::random_rewrite_case(id, rng);
      const Graph pre = infer_shapes(c.graph);
      const auto applied = apply_pass(pre, *pass, c.diagnostic, {});
      EquivalenceOptions opts;
      opts.trials = 8;
      opts.tol = testing::rewrite_tolerance(id);
      opts.seed = static_cast<std::uint64_t>(i);
      const auto report = verify_equivalence(pre, applied.graph, opts);
      worst_rel = std::max(worst_rel, report.max_rel);
      if (!o.check(report.pass, id + " case " + std::to_string(i) + ": " + report.first_failure)) return;
      if (id == "lower_einsum") {
        if (!o.check(report.max_rel <= 1e-6, id + " max_rel above 1e-6")) return;
      } else if (!o.check(report.max_abs == 0.0, id + " is not exact on case " + std::to_string(i))) {
        return;
      }
      ++total;
    }
  }
  const double secs = seconds_since(t0);
  o.check(secs < 30.0, "took " + std::to_string(secs) + " s (limit 30 s)");
  if (o.pass) o.detail << total << " cases over " << testing::rewrite_pass_ids().size() << " passes in " << secs << " s";
}

// 2. Every pass on every bundled graph keeps the interface.
void interface_preservation(Outcome& o) {
  int applied = 0;
  int violations = 0;
  for (const auto& name : zoo_names()) {
    const Graph g = infer_shapes(zoo_graph(name));
    PassContext ctx;
    for (const auto& sym : graph_symbols(g)) ctx.bindings[sym] = 2;
    std::vector<Diagnostic> targets;
    for (const auto& n : g.nodes) {
      const TensorSpec* first = n.inputs.empty() ? g.spec(n.outputs[0]) : g.spec(n.inputs[0]);
      targets.push_back(Diagnostic{n.id, DiagnosticKind::UnsupportedOp, std::string(op_name(n.op)),
                                   std::string(dtype_class(first->dtype)), ""});
    }
    targets.push_back(Diagnostic{std::string(kGraphLevel), DiagnosticKind::DynamicShape, "-", "-", ""});
    for (const auto& pass : pass_registry()) {
      for (const auto& d : targets) {
        if (!pass.applicable(g, d, ctx)) continue;
        const auto out = apply_pass(g, pass, d, ctx);
        ++applied;
        bool same = io_signature(g, ctx.bindings) == io_signature(out.graph) &&
                    out.graph.inputs.size() == g.inputs.size() && out.graph.outputs.size() == g.outputs.size();
        for (std::size_t i = 0; same && i < g.inputs.size(); ++i) {
          same = out.graph.inputs[i].name == g.inputs[i].name && out.graph.inputs[i].dtype == g.inputs[i].dtype;
        }
        for (std::size_t i = 0; same && i < g.outputs.size(); ++i) {
          same = out.graph.outputs[i].name == g.outputs[i].name && out.graph.outputs[i].dtype == g.outputs[i].dtype;
        }
        if (!same) {
          ++violations;
          o.check(false, name + " / " + pass.id + " changed the interface");
        }
      }
    }
  }
  o.check(applied >= static_cast<int>(pass_registry().size()), "only " + std::to_string(applied) + " applications");
  if (o.pass) o.detail << applied << " pass applications over " << zoo_names().size() << " graphs, " << violations << " violations";
}

// 3. The two-level Mod chain repairs with the expected pass sequences.
void mod_chain(Outcome& o) {
  TempDir tmp;
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {"toy_yolo", {"expand_mod_float", "eliminate_floor"}}, {"toy_yolo_int", {"expand_mod_integer"}}};
  for (const auto& [name, want] : cases) {
    Project p = make_project(tmp / name, name, tmp / ("kb_" + name + ".json"),
                             [](ProjectConfig& c) { c.backend_tolerance = Tolerance{1e-3, 1e-2, 1e-6}; });
    p.run_all();
    if (!o.check(p.status(3) == StageStatus::Passed, name + " stage 3 is " + std::string(status_name(p.status(3))))) return;
    const auto seq = pass_sequence(tmp / name);
    if (!o.check(seq == want, name + " pass sequence " + join(seq) + ", expected " + join(want))) return;
    const auto s3 = read_json_file(tmp / name / "results" / "stage3.json");
    if (!o.check(!s3.contains("intervention"), name + " needed an intervention")) return;
    const auto s4 = read_json_file(tmp / name / "results" / "stage4.json");
    if (!o.check(p.status(4) == StageStatus::Passed, name + " stage 4 misaligned: " + s4.at("alignment").dump())) return;
    o.detail << name << " " << join(seq) << " stage4 max_abs " << s4.at("alignment").at("max_abs").get<double>() << "; ";
  }
}

// 4. MaxPool3d and Einsum graphs deploy; snpe-like needs one pass fewer.
void maxpool_einsum(Outcome& o) {
  TempDir tmp;
  for (const std::string name : {"toy_lpr", "toy_einsum"}) {
    Project p = make_project(tmp / name, name, tmp / ("kb_" + name + ".json"));
    p.run_all();
    if (!o.check(all_done(p), name + " run_all did not complete: " + p.ledger().history.back().message)) return;
    const auto s3 = read_json_file(tmp / name / "results" / "stage3.json");
    if (!o.check(!s3.contains("intervention"), name + " needed an intervention")) return;
    o.detail << name << " " << join(pass_sequence(tmp / name)) << "; ";
  }
  std::map<std::string, std::size_t> receipts;
  for (const std::string profile : {"qnn-like", "snpe-like"}) {
    const auto root = tmp / ("yolo_" + profile);
    Project p = make_project(root, "toy_yolo", tmp / ("kb_" + profile + ".json"), {}, profile);
    p.run_all();
    if (!o.check(all_done(p), "toy_yolo under " + profile + " did not complete")) return;
    receipts[profile] = read_json_file(root / "receipts.json").size();
  }
  o.check(receipts["snpe-like"] + 1 == receipts["qnn-like"],
          "receipts qnn-like " + std::to_string(receipts["qnn-like"]) + ", snpe-like " + std::to_string(receipts["snpe-like"]));
  o.detail << "toy_yolo receipts qnn-like " << receipts["qnn-like"] << ", snpe-like " << receipts["snpe-like"];
}

// 5. FP16 emulation equals rounding around the reference, and the half
// conversion matches an independent encoder.
void fp16_oracle(Outcome& o) {
  int checks = 0;
  for (const auto op : testing::generated_ops()) {
    std::mt19937_64 rng(5000 + static_cast<int>(op));
    for (int i = 0; i < 100; ++i) {
      const auto c = testing::random_case(op, rng, true);
      const Graph g = infer_shapes(c.graph);
      const auto got = Session(g, SessionOptions{BackendKind::TargetFp16, {}, {}, nullptr}).run(c.feeds).outputs[0].second;
      std::vector<TensorValue> rounded;
      for (const auto& [_, t] : c.feeds) {
        TensorValue r = t;
        for (auto& v : r.floats()) v = testing::oracle_round_f16(v);
        rounded.push_back(std::move(r));
      }
      TensorValue want = testing::oracle_node(g.nodes[0], rounded, to_static(g.outputs[0].shape));
      for (auto& v : want.floats()) v = testing::oracle_round_f16(v);
      bool same = got.shape() == want.shape();
      for (std::int64_t e = 0; same && e < got.numel(); ++e) {
        const float a = got.floats()[static_cast<std::size_t>(e)];
        const float b = want.floats()[static_cast<std::size_t>(e)];
        same = std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b) || (std::isnan(a) && std::isnan(b));
      }
      if (!o.check(same, std::string(op_name(op)) + " case " + std::to_string(i) + " differs")) return;
      ++checks;
    }
  }
  std::vector<float> floats{65504.0f, 65520.0f, 2048.0f, 2049.0f, 65519.996f, 2050.0f, 2051.0f, 0.0f, -0.0f};
  for (std::uint32_t m : {1u, 2u, 3u, 0x155u, 0x3ffu}) floats.push_back(static_cast<float>(std::ldexp(m, -24)));
  floats.push_back(static_cast<float>(std::ldexp(1.0, -25)));
  floats.push_back(static_cast<float>(std::ldexp(3.0, -26)));
  std::mt19937_64 rng(16);
  std::uniform_int_distribution<int> expo(-30, 17);
  std::uniform_real_distribution<double> mant(1.0, 2.0);
  for (int i = 0; i < 10000; ++i) {
    float x = static_cast<float>(std::ldexp(mant(rng), expo(rng)));
    if (i % 2) x = -x;
    if (i % 5 == 0) {
      x = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
      if (std::isnan(x)) x = 1.0f;
    }
    floats.push_back(x);
  }
  for (float x : floats) {
    const bool ok = f32_to_f16_bits(x) == testing::oracle_f16_bits(x) &&
                    std::bit_cast<std::uint32_t>(round_f16(x)) == std::bit_cast<std::uint32_t>(testing::oracle_round_f16(x));
    if (!o.check(ok, "round_f16 disagrees with the oracle at " + std::to_string(x))) return;
  }
  o.check(round_f16(2049.0f) == 2048.0f && round_f16(65504.0f) == 65504.0f && std::isinf(round_f16(65520.0f)),
          "boundary values");
  if (o.pass) o.detail << checks << " per-op checks, " << floats.size() << " conversions";
}

CalibrationSet cal_set(const Graph& g, std::uint64_t seed, std::uint64_t first, int n) {
  CalibrationSet cal;
  for (int i = 0; i < n; ++i) cal.push_back(generate_feeds(g, seed, first + static_cast<std::uint64_t>(i)));
  return cal;
}

// 6. Quant-dequant error bound and the W8A8 conv scenario.
void quant_bound(Outcome& o) {
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  std::int64_t clamp_errors = 0;
  for (const std::string name : {"toy_conv", "toy_lpr", "toy_einsum", "toy_yolo", "toy_dynamic"}) {
    Graph g = zoo_graph(name);
    if (name == "toy_dynamic") g = bind_shapes(g, {{"N", 2}});
    const auto out = repair_graph(g, builtin_profile("qnn-like"), KnowledgeBase{}, RepairOptions{});
    if (!o.check(!out.intervention, name + " did not repair")) return;
    g = infer_shapes(out.graph);
    for (auto mode : {PrecisionMode::W8A8, PrecisionMode::W8A16}) {
      const auto params = calibrate(g, cal_set(g, 42, 4, 16), mode);
      SessionOptions opts;
      opts.observers.emplace(std::string(kObserveAll), [&](const std::string& t, const TensorValue& v) {
        if (!is_float(v.dtype())) return;
        const auto& p = params.at(t);
        const double lo = dequantize(quant_min(p.scheme), p);
        const double hi = dequantize(quant_max(p.scheme), p);
        for (float x : v.floats()) {
          const double q = fake_quant(x, p);
          if (x >= lo && x <= hi) {
            const double slack = std::fabs(static_cast<double>(x)) * std::numeric_limits<float>::epsilon();
            if (std::fabs(q - static_cast<double>(x)) > p.scale / 2 + slack) ++violations;
            ++checked;
          } else if (static_cast<float>(q) != static_cast<float>(x > hi ? hi : lo)) {
            ++clamp_errors;
          }
        }
      });
      const Session s(g, std::move(opts));
      for (std::uint64_t i = 0; i < 4; ++i) s.run(generate_feeds(g, 42, i));
    }
  }
  o.check(checked >= 10000, "only " + std::to_string(checked) + " in-range elements");
  o.check(violations == 0, std::to_string(violations) + " elements exceed scale/2");
  o.check(clamp_errors == 0, std::to_string(clamp_errors) + " out-of-range elements not clamped");
  TempDir tmp;
  Project p = make_project(tmp / "conv", "toy_conv", tmp / "kb.json", [](ProjectConfig& c) {
    c.quant.enabled = true;
    c.quant.mode = PrecisionMode::W8A8;
    c.quant.calibration_samples = 16;
    c.quant_tolerance = Tolerance{0.0, 0.05, 1e-6};
  });
  p.run_all();
  const bool stage5 = p.status(5) == StageStatus::Passed;
  double max_rel = std::numeric_limits<double>::infinity();
  if (fs::exists(tmp / "conv" / "results" / "stage5.json")) {
    const auto a = read_json_file(tmp / "conv" / "results" / "stage5.json").at("alignment");
    if (!a.at("max_rel").is_null()) max_rel = a.at("max_rel").get<double>();
  }
  o.check(stage5, "toy_conv W8A8 stage 5 max_rel " + std::to_string(max_rel));
  if (o.pass) o.detail << checked << " elements, 0 violations; toy_conv W8A8 max_rel " << max_rel;
}

bool done_status(StageStatus s, int stage) {
  return s == StageStatus::Passed || (stage == 5 && s == StageStatus::Skipped);
}

// Replays the ledger history; returns an empty string when no stage was ever
// recorded done while a predecessor was not.
std::string audit_ledger(const Ledger& ledger) {
  std::array<StageStatus, kStageCount> replay{};
  replay.fill(StageStatus::Pending);
  for (const auto& ev : ledger.history) {
    if (ev.stage < 1 || ev.stage > kStageCount) return "bad stage number";
    if (done_status(ev.status, ev.stage)) {
      for (int j = 1; j < ev.stage; ++j) {
        if (!done_status(replay[static_cast<std::size_t>(j - 1)], j)) {
          return "stage " + std::to_string(ev.stage) + " done while stage " + std::to_string(j) + " was " +
                 std::string(status_name(replay[static_cast<std::size_t>(j - 1)]));
        }
      }
    }
    replay[static_cast<std::size_t>(ev.stage - 1)] = ev.status;
  }
  for (int k = 1; k <= kStageCount; ++k) {
    const auto s = ledger.stages[static_cast<std::size_t>(k - 1)].status;
    if (replay[static_cast<std::size_t>(k - 1)] != s) return "history disagrees with current status";
    if (!done_status(s, k)) continue;
    for (int j = 1; j < k; ++j) {
      if (!done_status(ledger.stages[static_cast<std::size_t>(j - 1)].status, j)) return "current status out of order";
    }
  }
  return {};
}

int run_cli_process(const std::string& args, const fs::path& kb) {
  const std::string cmd = "PORTIR_KB=" + kb.string() + " " + PORTIR_CLI_PATH + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 7. Ledger discipline under random commands, bounded repair and exit 3.
void pipeline_discipline(Outcome& o) {
  TempDir tmp;
  std::mt19937_64 rng(7007);
  const std::vector<std::string> models{"toy_conv", "toy_unrepairable", "toy_conv", "toy_dynamic", "toy_yolo_int"};
  int commands = 0;
  for (int seq = 0; seq < 200; ++seq) {
    const auto root = tmp / ("p" + std::to_string(seq));
    const auto kb = tmp / ("kb" + std::to_string(seq) + ".json");
    Project p = make_project(root, models[rng() % models.size()], kb, [](ProjectConfig& c) { c.verify_trials = 8; });
    const int len = 4 + static_cast<int>(rng() % 8);
    for (int step = 0; step < len; ++step) {
      const int cmd = static_cast<int>(rng() % 11);
      try {
        if (cmd < 6) {
          p.run_stage(cmd + 1);
        } else if (cmd == 6) {
          p.run_all();
        } else if (cmd == 7) {
          ProjectConfig c = p.config();
          c.quant.enabled = !c.quant.enabled;
          p.set_config(c);
        } else if (cmd == 8) {
          if (fs::exists(root / "baseline" / "baseline.json")) write_text(root / "baseline" / "baseline.json", "{}");
        } else if (cmd == 9) {
          Graph g = load_graph(p.model_path());
          g.name += "x";
          save_graph(g, p.model_path());
        } else {
          p = Project::open(root);
          p.set_kb_override(kb);
        }
      } catch (const std::exception&) {
      }
      ++commands;
      for (const auto& ledger : {p.ledger(), Project::open(root).ledger()}) {
        const auto problem = audit_ledger(ledger);
        if (!o.check(problem.empty(), "sequence " + std::to_string(seq) + ": " + problem)) return;
      }
    }
  }
  std::vector<RewritePass> failing;
  for (int i = 0; i < 6; ++i) {
    failing.push_back(RewritePass{"broken_" + std::to_string(i), {"UnsupportedOp/MaxPool3d/*"},
                                  [](const Graph& g, const Diagnostic&, const PassContext&) {
                                    Graph out = g;
                                    for (auto& n : out.nodes) {
                                      if (n.op == OpKind::MaxPool3d) n.op = OpKind::Relu;
                                    }
                                    return out;
                                  }});
  }
  for (int bound : {1, 3, 5}) {
    RepairOptions opts;
    opts.retry_bound = bound;
    opts.registry = &failing;
    opts.verify.trials = 4;
    const auto out = repair_graph(zoo_graph("toy_unrepairable"), builtin_profile("qnn-like"), KnowledgeBase{}, opts);
    if (!o.check(static_cast<int>(out.attempts.size()) == bound && out.intervention.has_value(),
                 "R=" + std::to_string(bound) + " made " + std::to_string(out.attempts.size()) + " attempts")) {
      return;
    }
  }
  const auto proj = tmp / "unrepairable";
  const auto kb = tmp / "kb_cli.json";
  if (!o.check(run_cli_process("init " + proj.string() + " --model " + model_file("toy_unrepairable").string() +
                                   " --retry-bound 3",
                               kb) == 0,
               "init failed")) {
    return;
  }
  const int code = run_cli_process("run-all " + proj.string(), kb);
  o.check(code == 3, "run-all exit code " + std::to_string(code));
  const auto attempts = read_json_file(proj / "results" / "stage3.json").at("attempts").size();
  o.check(attempts <= 3, std::to_string(attempts) + " attempts with R=3");
  if (o.pass) o.detail << "200 sequences, " << commands << " commands, 0 violations; unrepairable exit 3 after " << attempts << " attempt(s)";
}

int attempts_of(const fs::path& root) {
  return static_cast<int>(read_json_file(root / "results" / "stage3.json").at("attempts").size());
}

// 8. Cold then warm KB runs, plus crash safety of the KB file.
void knowledge_loop(Outcome& o) {
  TempDir tmp;
  const auto kb = tmp / "kb.json";
  Project cold = make_project(tmp / "cold", "toy_yolo_int", kb);
  cold.run_all();
  if (!o.check(all_done(cold), "cold run did not complete")) return;
  const auto written = load_kb(kb);
  if (!o.check(!written.empty(), "cold run wrote nothing to the KB")) return;
  Project warm = make_project(tmp / "warm", "toy_yolo_int", kb);
  warm.run_all();
  if (!o.check(all_done(warm), "warm run did not complete")) return;
  const int a = attempts_of(tmp / "cold");
  const int b = attempts_of(tmp / "warm");
  if (!o.check(b < a, "warm attempts " + std::to_string(b) + " not fewer than cold " + std::to_string(a))) return;

  const std::string old = read_text(kb);
  KnowledgeBase next = written;
  next.record("UnsupportedOp/Mod/int", "expand_mod_integer", true, "crash");
  const pid_t pid = ::fork();
  if (pid == 0) {
    save_kb(next, kb, [] { ::_exit(0); });
    ::_exit(1);
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!o.check(read_text(kb) == old, "KB changed by a writer that died before rename")) return;
  std::mt19937_64 rng(88);
  for (int round = 0; round < 10; ++round) {
    const auto before = load_kb(kb);
    const pid_t writer = ::fork();
    if (writer == 0) {
      for (int i = 0; i < 100000; ++i) kb_writeback(kb, "UnsupportedOp/Mod/int", "loop", true, "x");
      ::_exit(0);
    }
    ::usleep(static_cast<useconds_t>(rng() % 20000));
    ::kill(writer, SIGKILL);
    ::waitpid(writer, &status, 0);
    try {
      const auto after = load_kb(kb);
      const auto entries = after.entries("UnsupportedOp/Mod/int");
      const bool grew = std::any_of(entries.begin(), entries.end(), [](const KbEntry& e) { return e.pass_id == "loop"; });
      if (!o.check(after == before || grew, "KB neither old nor new after kill")) return;
    } catch (const Error& e) {
      o.check(false, std::string("KB corrupt after kill: ") + e.what());
      return;
    }
  }
  o.detail << "cold " << a << " attempts, warm " << b << "; KB intact after 11 simulated crashes";
}

std::map<std::string, std::vector<std::uint8_t>> tree_bytes(const fs::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_bytes(e.path());
  }
  return out;
}

// 9. Fresh projects with the same seed produce identical outputs.
void determinism(Outcome& o) {
  TempDir tmp;
  int compared = 0;
  for (const std::string name : {"toy_conv", "toy_yolo", "toy_yolo_int", "toy_lpr", "toy_einsum", "toy_dynamic"}) {
    auto tweak = [&](ProjectConfig& c) { c.quant.enabled = name == "toy_conv"; };
    const auto a = tmp / (name + "_a");
    const auto b = tmp / (name + "_b");
    Project pa = make_project(a, name, tmp / (name + "_kb_a.json"), tweak);
    Project pb = make_project(b, name, tmp / (name + "_kb_b.json"), tweak);
    pa.run_all();
    pb.run_all();
    if (!o.check(all_done(pa) && all_done(pb), name + " did not complete")) return;
    if (!o.check(read_text(a / "report" / "report.json") == read_text(b / "report" / "report.json"),
                 name + " report.json differs")) {
      return;
    }
    if (!o.check(tree_bytes(a / "baseline") == tree_bytes(b / "baseline"), name + " baselines differ")) return;
    const auto arts = read_json_file(a / "report" / "report.json").at("artifacts");
    for (std::size_t i = 0; i < arts.size(); ++i) {
      const auto file = arts[i].at("file").get<std::string>();
      const auto ha = read_artifact(a / file).artifact_sha256();
      const auto hb = read_artifact(b / file).artifact_sha256();
      if (!o.check(ha == hb && ha == arts[i].at("artifact_sha256").get<std::string>(), name + " artifact hash differs")) {
        return;
      }
    }
    ++compared;
  }
  o.detail << compared << " bundled projects byte-identical";
}

// 10. All bundled scenarios deploy end to end within the time budget.
void desk_scale(Outcome& o) {
  TempDir tmp;
  double total = 0.0;
  for (const std::string name : {"toy_conv", "toy_yolo", "toy_yolo_int", "toy_lpr", "toy_einsum"}) {
    const auto t0 = Clock::now();
    Project p = make_project(tmp / name, name, tmp / ("kb_" + name + ".json"),
                             [&](ProjectConfig& c) { c.quant.enabled = name == "toy_conv"; });
    p.run_all();
    const double secs = seconds_since(t0);
    total += secs;
    if (!o.check(all_done(p), name + " did not complete")) return;
    o.detail << name << " " << secs << " s; ";
  }
  o.check(total < 60.0, "total " + std::to_string(total) + " s");
  o.detail << "total " << total << " s";
}

}  // namespace
}  // namespace portir

int main() {
  using portir::Outcome;
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"C1 rewrite equivalence", portir::rewrite_equivalence},
      {"C2 interface preservation", portir::interface_preservation},
      {"C3 two-level Mod chain", portir::mod_chain},
      {"C4 MaxPool3d and Einsum scenarios", portir::maxpool_einsum},
      {"C5 FP16 oracle", portir::fp16_oracle},
      {"C6 quantization bound", portir::quant_bound},
      {"C7 pipeline discipline", portir::pipeline_discipline},
      {"C8 knowledge-base loop", portir::knowledge_loop},
      {"C9 determinism", portir::determinism},
      {"C10 end-to-end desk scale", portir::desk_scale},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    const auto t0 = portir::Clock::now();
    try {
      run(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << portir::seconds_since(t0) << " s): " << o.detail.str()
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
