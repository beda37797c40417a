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

#include "ptsl/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "ptsl/errors.hpp"

namespace ptsl {

namespace {

constexpr std::array<char, 8> kMagic{'P', 'T', 'S', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(T));
  } else {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <typename T>
T get(std::istream& is) {
  std::array<char, sizeof(T)> bytes{};
  if (!is.read(bytes.data(), sizeof(T))) throw std::runtime_error("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void save_tensors(const std::filesystem::path& path, const ParameterList& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint64_t>(os, p.tensor.rows());
    put<std::uint64_t>(os, p.tensor.cols());
    for (double v : p.tensor.values()) put<double>(os, v);
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::vector<StoredTensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw std::runtime_error("not a checkpoint: " + path.string());
  if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("unsupported checkpoint version");
  const auto count = get<std::uint32_t>(is);
  std::vector<StoredTensor> out(count);
  for (auto& t : out) {
    const auto len = get<std::uint32_t>(is);
    t.name.resize(len);
    if (!is.read(t.name.data(), len)) throw std::runtime_error("truncated checkpoint");
    t.rows = get<std::uint64_t>(is);
    t.cols = get<std::uint64_t>(is);
    t.values.resize(t.rows * t.cols);
    for (double& v : t.values) v = get<double>(is);
  }
  return out;
}

void restore_tensors(const std::filesystem::path& path, ParameterList& params) {
  std::map<std::string, StoredTensor> by_name;
  for (auto& t : load_tensors(path)) by_name.emplace(t.name, std::move(t));
  for (auto& p : params) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint lacks " + p.name);
    if (it->second.rows != p.tensor.rows() || it->second.cols != p.tensor.cols())
      throw DimensionError("checkpoint shape mismatch for " + p.name);
    auto dst = p.tensor.mutable_values();
    std::copy(it->second.values.begin(), it->second.values.end(), dst.begin());
  }
}

nlohmann::json to_json(const NetworkConfig& c) {
  return {{"input_dim", c.input_dim},
          {"output_dim", c.output_dim},
          {"hidden_dim", c.hidden_dim},
          {"task_dim", c.task_dim},
          {"num_tasks", c.num_tasks},
          {"num_hidden", c.num_hidden},
          {"projection_mode", to_string(c.projection_mode)},
          {"residual_mode", to_string(c.residual_mode)},
          {"first_layer_down_projection", c.first_layer_down_projection},
          {"last_layer_up_projection", c.last_layer_up_projection}};
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.output_dim = j.at("output_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.task_dim = j.at("task_dim").get<std::size_t>();
  c.num_tasks = j.at("num_tasks").get<std::size_t>();
  c.num_hidden = j.at("num_hidden").get<std::size_t>();
  c.projection_mode = parse_projection_mode(j.at("projection_mode").get<std::string>());
  c.residual_mode = parse_residual_mode(j.at("residual_mode").get<std::string>());
  c.first_layer_down_projection = j.at("first_layer_down_projection").get<bool>();
  c.last_layer_up_projection = j.at("last_layer_up_projection").get<bool>();
  return c;
}

nlohmann::json to_json(const EncoderConfig& c) {
  return {{"kind", to_string(c.kind)},         {"num_experts", c.num_experts},
          {"expert_hidden", c.expert_hidden},  {"context_dim", c.context_dim},
          {"attention_hidden", c.attention_hidden}, {"output_dim", c.output_dim}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.kind = parse_encoder_kind(j.at("kind").get<std::string>());
  c.num_experts = j.at("num_experts").get<std::size_t>();
  c.expert_hidden = j.at("expert_hidden").get<std::size_t>();
  c.context_dim = j.at("context_dim").get<std::size_t>();
  c.attention_hidden = j.at("attention_hidden").get<std::size_t>();
  c.output_dim = j.at("output_dim").get<std::size_t>();
  return c;
}

nlohmann::json to_json(const NetworkSpec& s) {
  return {{"state_dim", s.state_dim},       {"extra_input", s.extra_input}, {"task_onehot", s.task_onehot},
          {"encoder", to_json(s.encoder)}, {"body", to_string(s.body)},    {"backbone", to_json(s.resolved_backbone())}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
  NetworkSpec s;
  s.state_dim = j.at("state_dim").get<std::size_t>();
  s.extra_input = j.at("extra_input").get<std::size_t>();
  s.task_onehot = j.at("task_onehot").get<bool>();
  s.encoder = encoder_config_from_json(j.at("encoder"));
  const auto body = j.at("body").get<std::string>();
  if (body != "dense" && body != "ptsl") throw ConfigError("unknown body kind '" + body + "'");
  s.body = body == "dense" ? BodyKind::Dense : BodyKind::Ptsl;
  s.backbone = network_config_from_json(j.at("backbone"));
  return s;
}

nlohmann::json to_json(const AgentSpec& s) {
  return {{"actor", to_json(s.actor)},
          {"critic", to_json(s.critic)},
          {"num_tasks", s.num_tasks},
          {"action_dim", s.action_dim}};
}

AgentSpec agent_spec_from_json(const nlohmann::json& j) {
  AgentSpec s;
  s.actor = network_spec_from_json(j.at("actor"));
  s.critic = network_spec_from_json(j.at("critic"));
  s.num_tasks = j.at("num_tasks").get<std::size_t>();
  s.action_dim = j.at("action_dim").get<std::size_t>();
  return s;
}

void save_agent(const std::filesystem::path& dir, const SacAgent& agent) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest{{"format", "ptsl-checkpoint"},
                          {"version", kVersion},
                          {"agent", to_json(agent.spec())},
                          {"log_alpha", agent.log_alphas()}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
  save_tensors(dir / "actor.bin", agent.actor().parameters());
  save_tensors(dir / "critics.bin", agent.critic_parameters());
  save_tensors(dir / "targets.bin", agent.target_parameters());
}

AgentSpec read_agent_manifest(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw std::runtime_error("missing manifest in " + dir.string());
  return agent_spec_from_json(nlohmann::json::parse(is).at("agent"));
}

void load_agent(const std::filesystem::path& dir, SacAgent& agent) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw std::runtime_error("missing manifest in " + dir.string());
  const auto manifest = nlohmann::json::parse(is);
  if (manifest.at("agent") != to_json(agent.spec()))
    throw ConfigError("checkpoint was written for a different agent configuration");
  ParameterList actor = agent.actor().parameters();
  ParameterList critics = agent.critic_parameters();
  ParameterList targets = agent.target_parameters();
  restore_tensors(dir / "actor.bin", actor);
  restore_tensors(dir / "critics.bin", critics);
  restore_tensors(dir / "targets.bin", targets);
  agent.set_log_alphas(manifest.at("log_alpha").get<std::vector<double>>());
}

}  // namespace ptsl
