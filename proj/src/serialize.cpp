// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/serialize.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "portir/error.hpp"

namespace portir {

using nlohmann::json;

namespace {

json shape_to_json(const Shape& shape) {
  json arr = json::array();
  for (const auto& d : shape) {
    if (d.is_static()) {
      arr.push_back(d.size());
    } else {
      arr.push_back(d.name());
    }
  }
  return arr;
}

json spec_to_json(const TensorSpec& s) {
  json j{{"name", s.name}, {"dtype", std::string(dtype_name(s.dtype))}, {"shape", shape_to_json(s.shape)}};
  if (s.range) j["range"] = json::array({s.range->lo, s.range->hi});
  return j;
}

json attr_to_json(const AttrValue& v) {
  return std::visit([](const auto& x) -> json { return json(x); }, v);
}

std::string blob_stem(std::string_view blob_dir, const std::string& name, std::set<std::string>& used) {
  std::string base = sanitize_file_stem(name);
  std::string stem = base;
  for (int i = 1; !used.insert(stem).second; ++i) stem = base + "_" + std::to_string(i);
  return std::string(blob_dir) + "/" + stem + ".bin";
}

[[noreturn]] void parse_fail(const std::string& field, const std::string& msg) {
  fail(ErrorCode::ParseError, field + ": " + msg);
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) parse_fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(path, "missing field '" + key + "'");
  return *it;
}

std::string get_string(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_string()) parse_fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

const json& get_array(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_array()) parse_fail(path + "." + key, "expected an array");
  return v;
}

DType get_dtype(const json& obj, const std::string& path) {
  const auto text = get_string(obj, "dtype", path);
  try {
    return parse_dtype(text);
  } catch (const Error&) {
    parse_fail(path + ".dtype", "unknown dtype '" + text + "'");
  }
}

Shape get_shape(const json& obj, const std::string& path) {
  Shape shape;
  const auto& arr = get_array(obj, "shape", path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& d = arr[i];
    const auto where = path + ".shape[" + std::to_string(i) + "]";
    if (d.is_number_integer()) {
      if (d.get<std::int64_t>() < 1) parse_fail(where, "static dims must be >= 1");
      shape.push_back(Dim::fixed(d.get<std::int64_t>()));
    } else if (d.is_string()) {
      if (!is_identifier(d.get<std::string>())) parse_fail(where, "invalid symbol '" + d.get<std::string>() + "'");
      shape.push_back(Dim::symbol(d.get<std::string>()));
    } else {
      parse_fail(where, "expected an integer or symbol name");
    }
  }
  if (shape.size() > kMaxRank) parse_fail(path + ".shape", "rank exceeds 5");
  return shape;
}

TensorSpec get_spec(const json& obj, const std::string& path) {
  TensorSpec s;
  s.name = get_string(obj, "name", path);
  s.dtype = get_dtype(obj, path);
  s.shape = get_shape(obj, path);
  if (auto it = obj.find("range"); it != obj.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
      parse_fail(path + ".range", "expected [lo, hi]");
    }
    s.range = ValueRange{(*it)[0].get<double>(), (*it)[1].get<double>()};
  }
  return s;
}

AttrValue get_attr(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::vector<std::int64_t> out;
    for (const auto& x : v) {
      if (!x.is_number_integer()) parse_fail(path, "list attributes must hold integers");
      out.push_back(x.get<std::int64_t>());
    }
    return out;
  }
  parse_fail(path, "unsupported attribute value");
}

std::vector<std::string> get_names(const json& obj, const std::string& key, const std::string& path) {
  std::vector<std::string> out;
  const auto& arr = get_array(obj, key, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) parse_fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a tensor name");
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

std::string stem_of(const fs::path& file) {
  std::string name = file.filename().string();
  for (std::string_view suffix : {".pir.json", ".json"}) {
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return name.substr(0, name.size() - suffix.size());
    }
  }
  return name;
}

}  // namespace

SerializedGraph serialize(const Graph& graph, std::string_view blob_dir) {
  require_valid(graph);
  SerializedGraph out;
  json doc;
  doc["format_version"] = kGraphFormatVersion;
  doc["name"] = graph.name;
  doc["inputs"] = json::array();
  for (const auto& s : graph.inputs) doc["inputs"].push_back(spec_to_json(s));
  doc["outputs"] = json::array();
  for (const auto& s : graph.outputs) doc["outputs"].push_back(spec_to_json(s));
  doc["nodes"] = json::array();
  for (const auto& n : graph.nodes) {
    json attrs = json::object();
    for (const auto& [k, v] : n.attrs) attrs[k] = attr_to_json(v);
    doc["nodes"].push_back(
        {{"id", n.id}, {"op", std::string(op_name(n.op))}, {"inputs", n.inputs}, {"outputs", n.outputs}, {"attrs", attrs}});
  }
  doc["constants"] = json::array();
  std::set<std::string> used;
  for (const auto& [name, t] : graph.constants) {
    const auto file = blob_stem(blob_dir, name, used);
    json shape = json::array();
    for (auto d : t.shape()) shape.push_back(d);
    doc["constants"].push_back({{"name", name}, {"dtype", std::string(dtype_name(t.dtype()))}, {"shape", shape}, {"file", file}});
    out.blobs.emplace_back(file, t.to_bytes());
  }
  out.document = doc.dump(2) + "\n";
  return out;
}

Graph deserialize(std::string_view document, const BlobLoader& load_blob) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte, document.size());
    const auto line = 1 + std::count(document.begin(), document.begin() + static_cast<std::ptrdiff_t>(offset), '\n');
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) parse_fail("<document>", "expected a JSON object");
  const auto& version = field(doc, "format_version", "<document>");
  if (!version.is_number_integer()) parse_fail("format_version", "expected an integer");
  if (version.get<std::int64_t>() != kGraphFormatVersion) {
    fail(ErrorCode::VersionError, "unsupported format_version " + std::to_string(version.get<std::int64_t>()) + " (expected " +
                                      std::to_string(kGraphFormatVersion) + ")");
  }

  Graph g;
  g.name = get_string(doc, "name", "<document>");
  const auto& inputs = get_array(doc, "inputs", "<document>");
  for (std::size_t i = 0; i < inputs.size(); ++i) g.inputs.push_back(get_spec(inputs[i], "inputs[" + std::to_string(i) + "]"));
  const auto& outputs = get_array(doc, "outputs", "<document>");
  for (std::size_t i = 0; i < outputs.size(); ++i) g.outputs.push_back(get_spec(outputs[i], "outputs[" + std::to_string(i) + "]"));

  const auto& nodes = get_array(doc, "nodes", "<document>");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto path = "nodes[" + std::to_string(i) + "]";
    Node n;
    n.id = get_string(nodes[i], "id", path);
    const auto op = get_string(nodes[i], "op", path);
    auto kind = parse_op(op);
    if (!kind) parse_fail(path + ".op", "unknown op '" + op + "'");
    n.op = *kind;
    n.inputs = get_names(nodes[i], "inputs", path);
    n.outputs = get_names(nodes[i], "outputs", path);
    if (auto it = nodes[i].find("attrs"); it != nodes[i].end()) {
      if (!it->is_object()) parse_fail(path + ".attrs", "expected an object");
      for (const auto& [k, v] : it->items()) n.attrs[k] = get_attr(v, path + ".attrs." + k);
    }
    g.nodes.push_back(std::move(n));
  }

  const auto& constants = get_array(doc, "constants", "<document>");
  for (std::size_t i = 0; i < constants.size(); ++i) {
    const auto path = "constants[" + std::to_string(i) + "]";
    const auto name = get_string(constants[i], "name", path);
    const auto dtype = get_dtype(constants[i], path);
    const auto shape = to_static(get_shape(constants[i], path));
    const auto file = get_string(constants[i], "file", path);
    std::vector<std::uint8_t> bytes;
    try {
      bytes = load_blob(file);
    } catch (const Error& e) {
      parse_fail(path + ".file", e.detail());
    }
    TensorValue value;
    try {
      value = TensorValue::from_bytes(dtype, shape, bytes);
    } catch (const Error& e) {
      parse_fail(path + ".file", e.detail());
    }
    if (!g.constants.emplace(name, std::move(value)).second) parse_fail(path + ".name", "duplicate constant '" + name + "'");
  }
  return g;
}

void save_graph(const Graph& graph, const fs::path& file) {
  const auto blob_dir = stem_of(file) + ".constants";
  const auto s = serialize(graph, blob_dir);
  const auto dir = file.parent_path();
  if (fs::exists(dir / blob_dir)) fs::remove_all(dir / blob_dir);
  for (const auto& [rel, bytes] : s.blobs) write_bytes(dir / rel, bytes);
  write_text(file, s.document);
}

Graph load_graph(const fs::path& file) {
  const auto document = read_text(file);
  const auto dir = file.parent_path();
  return deserialize(document, [&](const std::string& rel) { return read_bytes(dir / rel); });
}

std::string graph_sha256(const Graph& graph) {
  const auto s = serialize(graph);
  Sha256 h;
  h.update(s.document);
  for (const auto& [rel, bytes] : s.blobs) h.update(rel).update(bytes);
  return h.hex_digest();
}

std::string graph_file_sha256(const fs::path& file) {
  const auto document = read_text(file);
  Sha256 h;
  h.update(document);
  try {
    const auto doc = json::parse(document);
    if (auto it = doc.find("constants"); it != doc.end() && it->is_array()) {
      for (const auto& c : *it) {
        if (!c.contains("file") || !c["file"].is_string()) continue;
        const auto rel = c["file"].get<std::string>();
        h.update(rel);
        const auto path = file.parent_path() / rel;
        if (fs::exists(path)) h.update(read_bytes(path));
      }
    }
  } catch (const json::exception&) {
  }
  return h.hex_digest();
}

}  // namespace portir
