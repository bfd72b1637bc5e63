// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "portir/backend.hpp"
#include "portir/capability.hpp"
#include "portir/cli.hpp"
#include "portir/error.hpp"
#include "portir/pipeline.hpp"
#include "portir/serialize.hpp"
#include "portir/shape_inference.hpp"
#include "portir/surgery.hpp"
#include "portir/zoo.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::array to_numpy(const portir::TensorValue& v) {
  std::vector<py::ssize_t> shape(v.shape().begin(), v.shape().end());
  if (portir::is_float(v.dtype())) {
    py::array_t<float> a(shape);
    std::copy(v.floats().begin(), v.floats().end(), a.mutable_data());
    return std::move(a);
  }
  py::array_t<std::int64_t> a(shape);
  std::copy(v.ints().begin(), v.ints().end(), a.mutable_data());
  return std::move(a);
}

portir::TensorList from_feeds(const portir::Graph& g, const py::dict& feeds) {
  portir::TensorList out;
  for (const auto& spec : g.inputs) {
    if (!feeds.contains(spec.name)) portir::fail(portir::ErrorCode::FeedMismatch, "missing feed '" + spec.name + "'");
    const portir::StaticShape shape = portir::to_static(spec.shape);
    if (portir::is_float(spec.dtype)) {
      auto a = py::array_t<float, py::array::c_style | py::array::forcecast>::ensure(feeds[spec.name.c_str()]);
      std::vector<float> data(a.data(), a.data() + a.size());
      out.emplace_back(spec.name, portir::TensorValue::from_floats(spec.dtype, shape, std::move(data)));
    } else {
      auto a = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>::ensure(feeds[spec.name.c_str()]);
      std::vector<std::int64_t> data(a.data(), a.data() + a.size());
      out.emplace_back(spec.name, portir::TensorValue::from_ints(spec.dtype, shape, std::move(data)));
    }
  }
  return out;
}

py::dict to_dict(const portir::TensorList& list) {
  py::dict d;
  for (const auto& [name, v] : list) d[name.c_str()] = to_numpy(v);
  return d;
}

portir::BackendKind parse_backend(const std::string& name) {
  if (name == "reference") return portir::BackendKind::Reference;
  if (name == "fp16") return portir::BackendKind::TargetFp16;
  portir::fail(portir::ErrorCode::BadFlag, "backend must be 'reference' or 'fp16'");
}

py::dict stage_dict(const portir::StageResult& r) {
  py::dict d;
  d["stage"] = r.stage;
  d["name"] = std::string(portir::stage_name(r.stage));
  d["status"] = std::string(portir::status_name(r.status));
  d["message"] = r.message;
  d["data"] = to_py(r.data);
  return d;
}

}  // namespace

PYBIND11_MODULE(_portir, m) {
  m.doc() = "portir graph IR, capability checks, surgery and deployment pipeline";

  py::register_exception<portir::Error>(m, "PortirError", PyExc_RuntimeError);

  py::class_<portir::Graph>(m, "Graph")
      .def_readonly("name", &portir::Graph::name)
      .def_property_readonly("input_names",
                             [](const portir::Graph& g) {
                               std::vector<std::string> names;
                               for (const auto& s : g.inputs) names.push_back(s.name);
                               return names;
                             })
      .def_property_readonly("output_names",
                             [](const portir::Graph& g) {
                               std::vector<std::string> names;
                               for (const auto& s : g.outputs) names.push_back(s.name);
                               return names;
                             })
      .def_property_readonly("ops",
                             [](const portir::Graph& g) {
                               std::vector<std::string> ops;
                               for (const auto& n : g.nodes) ops.emplace_back(portir::op_name(n.op));
                               return ops;
                             })
      .def("io_signature", [](const portir::Graph& g, const portir::Bindings& b) {
        return to_py(portir::io_signature_to_json(portir::io_signature(g, b)));
      }, py::arg("bindings") = portir::Bindings{})
      .def("sha256", [](const portir::Graph& g) { return portir::graph_sha256(g); })
      .def("__repr__", [](const portir::Graph& g) {
        return "<portir.Graph '" + g.name + "' with " + std::to_string(g.nodes.size()) + " nodes>";
      });

  m.def("load_graph", [](const std::filesystem::path& p) { return portir::infer_shapes(portir::load_graph(p)); });
  m.def("save_graph", [](const portir::Graph& g, const std::filesystem::path& p) { portir::save_graph(g, p); });
  m.def("zoo_names", &portir::zoo_names);
  m.def("zoo_graph", [](const std::string& name) { return portir::infer_shapes(portir::zoo_graph(name)); });
  m.def("builtin_profiles", &portir::builtin_profile_names);

  m.def(
      "check",
      [](const portir::Graph& g, const std::string& profile) {
        std::vector<py::object> out;
        for (const auto& d : portir::check_compatibility(g, portir::resolve_profile(profile))) {
          out.push_back(to_py(portir::diagnostic_to_json(d)));
        }
        return out;
      },
      py::arg("graph"), py::arg("profile") = "qnn-like");

  m.def(
      "generate_feeds",
      [](const portir::Graph& g, std::uint64_t seed, std::uint64_t index) {
        return to_dict(portir::generate_feeds(g, seed, index));
      },
      py::arg("graph"), py::arg("seed") = 42, py::arg("index") = 0);

  m.def(
      "run",
      [](const portir::Graph& g, const py::dict& feeds, const std::string& backend) {
        portir::TensorList list = from_feeds(g, feeds);
        portir::SessionOptions opts;
        opts.backend = parse_backend(backend);
        portir::TensorList outs;
        {
          py::gil_scoped_release release;
          outs = portir::Session(g, std::move(opts)).run(list).outputs;
        }
        return to_dict(outs);
      },
      py::arg("graph"), py::arg("feeds"), py::arg("backend") = "reference");

  m.def("round_f16", &portir::round_f16);
  m.def("passes", [] {
    std::vector<std::string> ids;
    for (const auto& p : portir::pass_registry()) ids.push_back(p.id);
    return ids;
  });
  m.def(
      "apply_pass",
      [](const portir::Graph& g, const std::string& pass_id, const std::string& node, const portir::Bindings& b) {
        const auto* pass = portir::find_pass(pass_id);
        if (!pass) portir::fail(portir::ErrorCode::BadFlag, "unknown pass '" + pass_id + "'");
        portir::Diagnostic d;
        d.node_id = node;
        if (pass_id == "bind_shapes") d.kind = portir::DiagnosticKind::DynamicShape;
        return pass->transform(g, d, portir::PassContext{b});
      },
      py::arg("graph"), py::arg("pass_id"), py::arg("node") = std::string(portir::kGraphLevel),
      py::arg("bindings") = portir::Bindings{});
  m.def(
      "verify_equivalence",
      [](const portir::Graph& pre, const portir::Graph& post, int trials, std::uint64_t seed) {
        portir::EquivalenceOptions opts;
        opts.trials = trials;
        opts.seed = seed;
        const auto r = portir::verify_equivalence(pre, post, opts);
        py::dict d;
        d["trials"] = r.trials;
        d["agreeing"] = r.agreeing;
        d["max_abs"] = r.max_abs;
        d["max_rel"] = r.max_rel;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("pre"), py::arg("post"), py::arg("trials") = 64, py::arg("seed") = 0);

  py::class_<portir::Project>(m, "Project")
      .def_static(
          "init",
          [](const std::filesystem::path& root, const std::filesystem::path& model, const std::string& profile) {
            portir::InitOptions opts;
            opts.model = model;
            opts.profile = profile;
            return portir::Project::init(root, opts);
          },
          py::arg("root"), py::arg("model"), py::arg("profile") = "qnn-like")
      .def_static("open", &portir::Project::open)
      .def_property_readonly("root", &portir::Project::root)
      .def_property_readonly("config", [](const portir::Project& p) { return to_py(portir::config_to_json(p.config())); })
      .def("status",
           [](const portir::Project& p) {
             std::vector<std::string> s;
             for (int k = 1; k <= portir::kStageCount; ++k) s.emplace_back(portir::status_name(p.status(k)));
             return s;
           })
      .def("set_kb", [](portir::Project& p, const std::filesystem::path& kb) { p.set_kb_override(kb); })
      .def("run_stage", [](portir::Project& p, int k) { return stage_dict(p.run_stage(k)); })
      .def("run_all", [](portir::Project& p) {
        std::vector<py::dict> out;
        for (const auto& r : p.run_all()) out.push_back(stage_dict(r));
        return out;
      });

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"portir"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = portir::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
