#pragma once

#include "kinnet/nn/optim.hpp"
#include "kinnet/nn/tape.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace kinnet::nn {

inline constexpr int kCheckpointVersion = 1;

// A checkpoint is one JSON document:
//   {"format": "kinnet.checkpoint", "version": 1, "manifest": {...},
//    "parameters": {name: {"shape": [...], "values": [...]}},
//    "optimizers": {label: {"steps": t, "m": {...}, "v": {...}}}}
// Doubles are printed in shortest round-trip form, so loading is bit-exact.
struct Checkpoint {
  nlohmann::json manifest = nlohmann::json::object();
  std::map<std::string, Tensor> parameters;
  struct OptimizerState {
    long steps = 0;
    std::map<std::string, Adam::Moments> moments;
  };
  std::map<std::string, OptimizerState> optimizers;
};

// Copies parameter values into a checkpoint section.
void store_parameters(Checkpoint& ckpt, const ParameterSet& params, const std::string& prefix = "");
// Restores every parameter of `params` (looked up as prefix + name); throws
// FormatError on a missing entry or a shape mismatch.
void load_parameters(const Checkpoint& ckpt, ParameterSet& params, const std::string& prefix = "");

void store_optimizer(Checkpoint& ckpt, const std::string& label, const Adam& adam);
void load_optimizer(const Checkpoint& ckpt, const std::string& label, Adam& adam);

std::string write_checkpoint_json(const Checkpoint& ckpt);
Checkpoint parse_checkpoint_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kinnet::nn
