// Copyright 2026 The PTSL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Parameter checkpoints.
//
// Binary layout, all integers and reals little-endian:
//   "PTSLCKPT" | u32 version (1) | u32 entry count
//   per entry: u32 name length | name bytes | u64 rows | u64 cols | rows*cols f64
// A JSON manifest written next to the tensors records the configuration.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptsl/nn.hpp"
#include "ptsl/sac.hpp"

namespace ptsl {

struct StoredTensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

void save_tensors(const std::filesystem::path& path, const ParameterList& params);
std::vector<StoredTensor> load_tensors(const std::filesystem::path& path);
/// Copies stored values into `params` by name; every parameter must be present
/// with a matching shape.
void restore_tensors(const std::filesystem::path& path, ParameterList& params);

nlohmann::json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AgentSpec& spec);
AgentSpec agent_spec_from_json(const nlohmann::json& j);

/// Writes manifest.json plus actor/critic/target tensor files and the
/// temperatures into `dir`.
void save_agent(const std::filesystem::path& dir, const SacAgent& agent);
/// Restores parameters into an agent built from the same spec.
void load_agent(const std::filesystem::path& dir, SacAgent& agent);
AgentSpec read_agent_manifest(const std::filesystem::path& dir);

}  // namespace ptsl
