#include "kinnet/nn/checkpoint.hpp"

#include "kinnet/clip_io.hpp"
#include "kinnet/errors.hpp"

namespace kinnet::nn {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "kinnet.checkpoint";

json tensor_to_json(const Tensor& t) {
  return {{"shape", t.shape()},
          {"values", std::vector<double>(t.values().begin(), t.values().end())}};
}

Tensor tensor_from_json(const json& j, const std::string& name) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("values")) {
    throw FormatError("tensor '" + name + "' needs shape and values");
  }
  auto shape = j["shape"].get<std::vector<int>>();
  auto values = j["values"].get<std::vector<double>>();
  if (shape_size(shape) != values.size()) {
    throw FormatError("tensor '" + name + "' has " + std::to_string(values.size()) +
                      " values for shape " + shape_string(shape));
  }
  return Tensor(std::move(shape), std::move(values));
}

json tensors_to_json(const std::map<std::string, Tensor>& m) {
  json out = json::object();
  for (const auto& [name, t] : m) {
    out[name] = tensor_to_json(t);
  }
  return out;
}

}  // namespace

void store_parameters(Checkpoint& ckpt, const ParameterSet& params, const std::string& prefix) {
  for (const Parameter* p : params.all()) {
    ckpt.parameters[prefix + p->name] = p->value;
  }
}

void load_parameters(const Checkpoint& ckpt, ParameterSet& params, const std::string& prefix) {
  for (Parameter* p : params.all()) {
    auto it = ckpt.parameters.find(prefix + p->name);
    if (it == ckpt.parameters.end()) {
      throw FormatError("checkpoint has no parameter '" + prefix + p->name + "'");
    }
    if (it->second.shape() != p->value.shape()) {
      throw FormatError("parameter '" + prefix + p->name + "' has shape " +
                        it->second.shape_string() + ", model expects " + p->value.shape_string());
    }
    p->value = it->second;
  }
}

void store_optimizer(Checkpoint& ckpt, const std::string& label, const Adam& adam) {
  ckpt.optimizers[label] = {adam.steps(), adam.state()};
}

void load_optimizer(const Checkpoint& ckpt, const std::string& label, Adam& adam) {
  auto it = ckpt.optimizers.find(label);
  if (it == ckpt.optimizers.end()) {
    throw FormatError("checkpoint has no optimizer state '" + label + "'");
  }
  adam.set_state(it->second.steps, it->second.moments);
}

std::string write_checkpoint_json(const Checkpoint& ckpt) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kCheckpointVersion;
  doc["manifest"] = ckpt.manifest;
  doc["parameters"] = tensors_to_json(ckpt.parameters);
  json opts = json::object();
  for (const auto& [label, state] : ckpt.optimizers) {
    json m = json::object();
    json v = json::object();
    for (const auto& [name, mom] : state.moments) {
      m[name] = tensor_to_json(mom.m);
      v[name] = tensor_to_json(mom.v);
    }
    opts[label] = {{"steps", state.steps}, {"m", m}, {"v", v}};
  }
  doc["optimizers"] = opts;
  return doc.dump();
}

Checkpoint parse_checkpoint_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kFormat) {
    throw FormatError("not a kinnet checkpoint");
  }
  if (doc.value("version", -1) != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + doc["version"].dump());
  }
  Checkpoint ckpt;
  ckpt.manifest = doc.value("manifest", json::object());
  for (const auto& [name, t] : doc.at("parameters").items()) {
    ckpt.parameters[name] = tensor_from_json(t, name);
  }
  if (doc.contains("optimizers")) {
    for (const auto& [label, st] : doc["optimizers"].items()) {
      Checkpoint::OptimizerState state;
      state.steps = st.at("steps").get<long>();
      for (const auto& [name, m] : st.at("m").items()) {
        state.moments[name].m = tensor_from_json(m, name);
        state.moments[name].v = tensor_from_json(st.at("v").at(name), name);
      }
      ckpt.optimizers[label] = std::move(state);
    }
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_text_file(path, write_checkpoint_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint_json(read_text_file(path));
}

}  // namespace kinnet::nn
