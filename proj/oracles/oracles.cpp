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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ptsl/envs.hpp"

namespace ptsl::oracle {

namespace {

double eval_loss(const std::function<ad::Tensor(ad::Tape&)>& loss) {
  ad::Tape tape(false);
  return loss(tape).item();
}

Vec affine(const Mat& w, const Vec& b, const Vec& x) {
  // w is in x out.
  Vec y(w.empty() ? 0 : w.front().size(), 0.0);
  for (std::size_t o = 0; o < y.size(); ++o) {
    double acc = b.empty() ? 0.0 : b[o];
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i][o];
    y[o] = acc;
  }
  return y;
}

Vec linear(const ParameterList& params, const std::string& base, const Vec& x, bool bias = true) {
  const Mat w = to_mat(find(params, base + ".weight"));
  const Vec b = bias ? to_mat(find(params, base + ".bias")).front() : Vec{};
  return affine(w, b, x);
}

Vec project(const ad::Tensor& p, const Vec& x) { return affine(to_mat(p), {}, x); }

Vec relu(Vec v) {
  for (double& e : v) e = std::max(0.0, e);
  return v;
}

Vec add(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
  return out;
}

// Mlp with ReLU between layers, none at the end.
Vec mlp(const ParameterList& params, const std::string& prefix, std::size_t layers, const Vec& x) {
  Vec h = x;
  for (std::size_t l = 0; l < layers; ++l) {
    h = linear(params, prefix + "." + std::to_string(l), h);
    if (l + 1 < layers) h = relu(h);
  }
  return h;
}

std::size_t count_layers(const ParameterList& params, const std::string& prefix) {
  std::size_t n = 0;
  while (true) {
    const std::string name = prefix + "." + std::to_string(n) + ".weight";
    const bool found = std::any_of(params.begin(), params.end(), [&](const NamedTensor& p) { return p.name == name; });
    if (!found) return n;
    ++n;
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

GradCheckResult finite_difference(const std::function<ad::Tensor(ad::Tape&)>& loss, const ParameterList& params,
                                  double step, double floor) {
  for (const auto& p : params) {
    ad::Tensor t = p.tensor;
    if (t.has_grad()) t.zero_grad();
  }
  {
    ad::Tape tape;
    ad::Tensor l = loss(tape);
    tape.backward(l);
  }
  GradCheckResult result;
  for (const auto& p : params) {
    ad::Tensor t = p.tensor;
    const std::size_t n = t.size();
    std::vector<double> analytic(n, 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    std::vector<double> numeric(n, 0.0);
    auto values = t.mutable_values();
    for (std::size_t k = 0; k < n; ++k) {
      const double orig = values[k];
      values[k] = orig + step;
      const double up = eval_loss(loss);
      values[k] = orig - step;
      const double down = eval_loss(loss);
      values[k] = orig;
      numeric[k] = (up - down) / (2.0 * step);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
      na += analytic[k] * analytic[k];
      nn += numeric[k] * numeric[k];
    }
    diff = std::sqrt(diff);
    na = std::sqrt(na);
    nn = std::sqrt(nn);
    const double rel = (na < floor && nn < floor) ? 0.0 : diff / std::max(na + nn, floor);
    if (rel >= result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst = p.name;
    }
    result.scalars += n;
  }
  return result;
}

void randomize(const ParameterList& params, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (const auto& p : params) {
    ad::Tensor t = p.tensor;
    for (double& v : t.mutable_values()) v = dist(rng);
  }
}

const ad::Tensor& find(const ParameterList& params, const std::string& name) {
  for (const auto& p : params) {
    if (p.name == name) return p.tensor;
  }
  throw std::out_of_range("no parameter named " + name);
}

Mat to_mat(const ad::Tensor& t) {
  Mat m(t.rows(), Vec(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.values()[r * t.cols() + c];
  return m;
}

Vec backbone_forward(const NetworkConfig& c, const ParameterList& params, const Vec& x, int task) {
  const std::size_t N = c.num_hidden;
  const std::string tj = "task." + std::to_string(task) + ".";
  const bool shared = c.projection_mode == ProjectionMode::Shared;
  Vec h = x;
  Vec prev;
  for (std::size_t i = 0; i <= N; ++i) {
    const std::string si = std::to_string(i);
    Vec s = linear(params, "shared." + si, h);
    Vec p;
    if (i == 0) {
      p = c.first_layer_down_projection ? project(find(params, "proj.down.0"), h) : h;
    } else {
      p = project(find(params, shared ? "proj.down.shared" : "proj.down." + si), h);
      switch (c.residual_mode) {
        case ResidualMode::None: break;
        case ResidualMode::Addition: p = add(p, prev); break;
        case ResidualMode::LearnableSum: {
          const double a = find(params, "residual.alpha").values()[0];
          const double b = find(params, "residual.beta").values()[0];
          for (std::size_t k = 0; k < p.size(); ++k) p[k] = a * p[k] + b * prev[k];
          break;
        }
        case ResidualMode::LearnableProjection: {
          Vec cat = p;
          cat.insert(cat.end(), prev.begin(), prev.end());
          p = project(find(params, "residual.projection"), cat);
          break;
        }
      }
    }
    Vec t = linear(params, tj + si, p);
    const bool direct = i == N && !c.last_layer_up_projection;
    if (!direct) t = relu(t);
    Vec up;
    if (direct) {
      up = t;
    } else if (i == N) {
      up = project(find(params, "proj.up." + si), t);
    } else {
      up = project(find(params, shared ? "proj.up.shared" : "proj.up." + si), t);
    }
    Vec z = add(s, up);
    h = i < N ? relu(z) : z;
    prev = t;
  }
  return h;
}

Vec mixture_weights(const ParameterList& params, int task) {
  const Mat contexts = to_mat(find(params, "contexts"));
  const std::size_t layers = count_layers(params, "attention");
  const Vec logits = mlp(params, "attention", layers, contexts.at(static_cast<std::size_t>(task)));
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vec w(logits.size());
  double z = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    w[a] = std::exp(logits[a] - mx);
    z += w[a];
  }
  for (double& v : w) v /= z;
  return w;
}

Vec mixture_forward(const EncoderConfig& config, const ParameterList& params, std::size_t num_tasks, const Vec& x,
                    int task) {
  if (task < 0 || static_cast<std::size_t>(task) >= num_tasks) throw std::out_of_range("task");
  switch (config.kind) {
    case EncoderKind::Identity: return x;
    case EncoderKind::Mlp: return mlp(params, "mlp", count_layers(params, "mlp"), x);
    case EncoderKind::CareMixture: break;
  }
  const Vec w = mixture_weights(params, task);
  Vec out;
  for (std::size_t a = 0; a < w.size(); ++a) {
    const std::string prefix = "expert." + std::to_string(a);
    const Vec e = mlp(params, prefix, count_layers(params, prefix), x);
    if (out.empty()) out.assign(e.size(), 0.0);
    for (std::size_t k = 0; k < e.size(); ++k) out[k] += w[a] * e[k];
  }
  return out;
}

std::size_t enumerate_parameters(const NetworkConfig& config) {
  const PtslBackbone net(config, 0);
  std::size_t n = 0;
  for (const auto& p : net.parameters()) n += p.tensor.rows() * p.tensor.cols();
  return n;
}

std::optional<NetworkConfig> exhaustive_budget_search(
    std::size_t target, const BudgetSearch& search, const std::function<std::size_t(const NetworkConfig&)>& counter) {
  std::optional<NetworkConfig> best;
  std::size_t best_n = 0;
  for (std::size_t h = search.min_hidden; h <= search.max_hidden; ++h) {
    std::vector<std::size_t> ds;
    if (search.search_task_dim) {
      for (std::size_t d = search.min_task_dim; d <= std::min(h, search.max_task_dim); ++d) ds.push_back(d);
    } else if (search.base.task_dim <= h) {
      ds.push_back(search.base.task_dim);
    }
    for (std::size_t d : ds) {
      NetworkConfig c = search.base;
      c.hidden_dim = h;
      c.task_dim = d;
      const std::size_t n = counter(c);
      if (n > target) continue;
      // Ascending scan, so >= lets the larger H, then larger D, win ties.
      if (!best || n >= best_n) {
        best = c;
        best_n = n;
      }
    }
  }
  return best;
}

GridResult best_constant_policy(const std::vector<std::string>& env_ids, std::size_t n, std::size_t episodes,
                                std::uint64_t seed) {
  GridResult out;
  std::vector<Env> envs;
  for (const auto& id : env_ids) envs.emplace_back(make_env_spec(id));
  for (std::size_t ix = 0; ix < n; ++ix) {
    for (std::size_t iy = 0; iy < n; ++iy) {
      const double ax = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(ix) / static_cast<double>(n - 1);
      const double ay = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(iy) / static_cast<double>(n - 1);
      const std::vector<double> action{ax, ay};
      double successes = 0.0;
      for (auto& env : envs) {
        for (std::size_t e = 0; e < episodes; ++e) {
          env.reset(seed + e);
          StepResult r;
          do {
            r = env.step(action);
          } while (!r.done);
          successes += env.success() ? 1.0 : 0.0;
        }
      }
      const double mean = successes / static_cast<double>(episodes * envs.size());
      ++out.policies;
      if (mean > out.best_success || out.policies == 1) {
        out.best_success = mean;
        out.best_ax = ax;
        out.best_ay = ay;
      }
    }
  }
  return out;
}

DensityEstimate tanh_gaussian_density(double mu, double sigma, double a, std::size_t samples, double half_width,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double y = std::tanh(mu + sigma * normal(rng));
    if (std::abs(y - a) <= half_width) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  const double width = 2.0 * half_width;
  return {p / width, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)) / width};
}

double blend(double target, double online, double tau, int k) {
  const double keep = std::pow(1.0 - tau, k);
  return keep * target + (1.0 - keep) * online;
}

double td_target(double r, double gamma, double done, double q1, double q2, double alpha, double log_prob) {
  const double q = q1 < q2 ? q1 : q2;
  return r + gamma * (1.0 - done) * (q - alpha * log_prob);
}

std::map<std::pair<int, std::size_t>, AggregateCell> recompute_aggregate(const std::vector<std::filesystem::path>& csvs) {
  std::map<std::pair<int, std::size_t>, std::vector<double>> values;
  for (const auto& path : csvs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    const auto header = split(line);
    std::size_t c_step = 0, c_task = 0, c_succ = 0;
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == "step") c_step = k;
      if (header[k] == "task_id") c_task = k;
      if (header[k] == "success_rate") c_succ = k;
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line);
      values[{std::stoi(f.at(c_task)), std::stoull(f.at(c_step))}].push_back(std::stod(f.at(c_succ)));
    }
  }
  std::map<std::pair<int, std::size_t>, AggregateCell> out;
  for (const auto& [key, v] : values) {
    if (v.size() != csvs.size()) continue;
    AggregateCell cell;
    cell.n = v.size();
    double s = 0.0;
    for (double e : v) s += e;
    cell.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double e : v) ss += (e - cell.mean) * (e - cell.mean);
      const double var = ss / static_cast<double>(v.size() - 1);
      cell.stderr_ = std::sqrt(var / static_cast<double>(v.size()));
    }
    out[key] = cell;
  }
  return out;
}

std::optional<std::size_t> scan_threshold(std::vector<std::pair<std::size_t, double>> curve, double threshold) {
  std::sort(curve.begin(), curve.end());
  for (const auto& [step, value] : curve) {
    if (value >= threshold) return step;
  }
  return std::nullopt;
}

}  // namespace ptsl::oracle
