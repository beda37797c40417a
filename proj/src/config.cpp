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

#include "ptsl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ptsl/envs.hpp"
#include "ptsl/errors.hpp"

namespace ptsl {

namespace {

const std::vector<std::pair<Preset, std::string>>& preset_names() {
  static const std::vector<std::pair<Preset, std::string>> names{
      {Preset::MtsacBaseline, "mtsac-baseline"},
      {Preset::PtslOnly, "ptsl-only"},
      {Preset::CarePtsl, "care-ptsl"},
      {Preset::CarePtslShallow, "care-ptsl-shallow"},
      {Preset::AblationProjection, "ablation-projection"},
      {Preset::AblationResidual, "ablation-residual"},
  };
  return names;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || v.empty()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a real number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

Field size_field(std::string key, std::size_t ExperimentConfig::*m) {
  return {key, [m](const ExperimentConfig& c) { return std::to_string(c.*m); },
          [m, key](ExperimentConfig& c, const std::string& v) { c.*m = parse_size(key, v); }};
}

template <typename Sub>
Field sub_size(std::string key, Sub ExperimentConfig::*s, std::size_t Sub::*m) {
  return {key, [s, m](const ExperimentConfig& c) { return std::to_string(c.*s.*m); },
          [s, m, key](ExperimentConfig& c, const std::string& v) { c.*s.*m = parse_size(key, v); }};
}

template <typename Sub>
Field sub_real(std::string key, Sub ExperimentConfig::*s, double Sub::*m) {
  return {key, [s, m](const ExperimentConfig& c) { return fmt_real(c.*s.*m); },
          [s, m, key](ExperimentConfig& c, const std::string& v) { c.*s.*m = parse_real(key, v); }};
}

template <typename Sub>
Field sub_bool(std::string key, Sub ExperimentConfig::*s, bool Sub::*m) {
  return {key, [s, m](const ExperimentConfig& c) { return std::string(c.*s.*m ? "true" : "false"); },
          [s, m, key](ExperimentConfig& c, const std::string& v) { c.*s.*m = parse_bool(key, v); }};
}

// Order here is the canonical serialization order.
const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> f{
      {"preset", [](const C& c) { return to_string(c.preset); },
       [](C& c, const std::string& v) { c.preset = parse_preset(v); }},
      {"suite", [](const C& c) { return c.suite; }, [](C& c, const std::string& v) { c.suite = v; }},
      {"seeds",
       [](const C& c) {
         std::string s;
         for (std::size_t i = 0; i < c.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(c.seeds[i]);
         return s;
       },
       [](C& c, const std::string& v) { c.seeds = parse_seed_list(v); }},
      size_field("steps_per_task", &C::steps_per_task),
      size_field("eval_interval", &C::eval_interval),
      size_field("eval_episodes", &C::eval_episodes),
      {"output_dir", [](const C& c) { return c.output_dir.generic_string(); },
       [](C& c, const std::string& v) { c.output_dir = v; }},
      sub_size("network.hidden_dim", &C::network, &NetworkConfig::hidden_dim),
      sub_size("network.task_dim", &C::network, &NetworkConfig::task_dim),
      sub_size("network.num_hidden", &C::network, &NetworkConfig::num_hidden),
      {"network.projection_mode", [](const C& c) { return to_string(c.network.projection_mode); },
       [](C& c, const std::string& v) { c.network.projection_mode = parse_projection_mode(v); }},
      {"network.residual_mode", [](const C& c) { return to_string(c.network.residual_mode); },
       [](C& c, const std::string& v) { c.network.residual_mode = parse_residual_mode(v); }},
      sub_bool("network.first_layer_down_projection", &C::network, &NetworkConfig::first_layer_down_projection),
      sub_bool("network.last_layer_up_projection", &C::network, &NetworkConfig::last_layer_up_projection),
      sub_size("encoder.num_experts", &C::encoder, &EncoderConfig::num_experts),
      sub_size("encoder.expert_hidden", &C::encoder, &EncoderConfig::expert_hidden),
      sub_size("encoder.context_dim", &C::encoder, &EncoderConfig::context_dim),
      sub_size("encoder.attention_hidden", &C::encoder, &EncoderConfig::attention_hidden),
      sub_size("encoder.output_dim", &C::encoder, &EncoderConfig::output_dim),
      sub_real("sac.gamma", &C::sac, &SacConfig::gamma),
      sub_real("sac.tau", &C::sac, &SacConfig::tau),
      sub_real("sac.lr", &C::sac, &SacConfig::lr),
      sub_size("sac.batch_size", &C::sac, &SacConfig::batch_size),
      sub_size("sac.warmup_steps_per_task", &C::sac, &SacConfig::warmup_steps_per_task),
      sub_size("sac.buffer_capacity_per_task", &C::sac, &SacConfig::buffer_capacity_per_task),
      sub_real("sac.init_alpha", &C::sac, &SacConfig::init_alpha),
      sub_real("sac.log_std_min", &C::sac, &SacConfig::log_std_min),
      sub_real("sac.log_std_max", &C::sac, &SacConfig::log_std_max),
  };
  return f;
}

}  // namespace

std::string to_string(Preset preset) {
  for (const auto& [p, n] : preset_names())
    if (p == preset) return n;
  throw ConfigError("unknown preset");
}

Preset parse_preset(const std::string& name) {
  for (const auto& [p, n] : preset_names())
    if (n == name) return p;
  throw ConfigError("unknown preset '" + name + "'");
}

const std::vector<Preset>& all_presets() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> v;
    for (const auto& [p, n] : preset_names()) v.push_back(p);
    return v;
  }();
  return all;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::uint64_t v = 0;
    const auto* end = item.data() + item.size();
    auto [p, ec] = std::from_chars(item.data(), end, v);
    if (item.empty() || ec != std::errc() || p != end) throw ConfigError("seeds: bad seed '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("seeds: list is empty");
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  if (uniq.size() != seeds.size()) throw ConfigError("seeds: duplicate seed");
  return seeds;
}

NetworkConfig ExperimentConfig::default_network() {
  NetworkConfig c;
  c.hidden_dim = 48;
  c.task_dim = 8;
  c.num_hidden = 2;
  return c;
}

SacConfig ExperimentConfig::default_sac() {
  SacConfig s;
  s.batch_size = 64;
  return s;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (steps_per_task == 0) throw ConfigError("steps_per_task must be > 0");
  if (eval_interval == 0) throw ConfigError("eval_interval must be > 0");
  if (eval_episodes == 0) throw ConfigError("eval_episodes must be > 0");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
  EnvSuite::suite_members(suite);
  if (network.num_hidden < 1) throw ConfigError("network.num_hidden must be >= 1");
  if (preset == Preset::CarePtslShallow && network.num_hidden < 2)
    throw ConfigError("care-ptsl-shallow needs network.num_hidden >= 2");
  if (network.hidden_dim == 0 || network.task_dim == 0 || network.task_dim > network.hidden_dim)
    throw ConfigError("network widths need 0 < task_dim <= hidden_dim");
  encoder.validate();
  sac.validate();
}

std::string ExperimentConfig::to_text() const {
  std::string out = "schema_version = " + std::to_string(kSchemaVersion) + "\n";
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  std::map<std::string, const Field*> by_key;
  for (const auto& f : fields()) by_key[f.key] = &f;
  std::set<std::string> seen;
  bool have_version = false;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (key == "schema_version") {
      const auto v = parse_size(key, value);
      if (v != static_cast<std::size_t>(kSchemaVersion))
        throw ConfigError("unsupported schema_version " + value + " (expected " + std::to_string(kSchemaVersion) + ")");
      have_version = true;
      continue;
    }
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second->set(c, value);
  }
  if (!have_version) throw ConfigError("missing schema_version");
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << to_text();
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(to_text())); }

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace ptsl
