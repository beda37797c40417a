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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptsl/backbone.hpp"
#include "ptsl/encoder.hpp"
#include "ptsl/sac.hpp"

namespace ptsl {

enum class Preset {
  MtsacBaseline,
  PtslOnly,
  CarePtsl,
  CarePtslShallow,
  AblationProjection,
  AblationResidual,
};

std::string to_string(Preset preset);
Preset parse_preset(const std::string& name);
const std::vector<Preset>& all_presets();

struct ExperimentConfig {
  static constexpr int kSchemaVersion = 1;

  Preset preset = Preset::PtslOnly;
  std::string suite = "mt4-toy";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  std::size_t steps_per_task = 50000;
  std::size_t eval_interval = 2000;
  std::size_t eval_episodes = 10;
  std::filesystem::path output_dir = "runs";
  // Reference widths; budget-matched methods search H and D around them.
  NetworkConfig network = default_network();
  EncoderConfig encoder;
  SacConfig sac = default_sac();

  static NetworkConfig default_network();
  static SacConfig default_sac();

  void validate() const;

  /// Canonical key = value text covering every field.
  [[nodiscard]] std::string to_text() const;
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// FNV-1a over to_text(), as 16 hex digits.
  [[nodiscard]] std::string hash() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

std::uint64_t fnv1a(const std::string& data);
std::string hex64(std::uint64_t value);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace ptsl
