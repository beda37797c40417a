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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "checks.hpp"
#include "ptsl/backbone.hpp"
#include "ptsl/config.hpp"
#include "ptsl/encoder.hpp"
#include "ptsl/envs.hpp"
#include "ptsl/errors.hpp"
#include "ptsl/experiment.hpp"

namespace py = pybind11;
using namespace ptsl;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ad::Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return ad::Tensor::from_values({r, c}, std::vector<double>(a.data(), a.data() + r * c));
}

Array to_array(const ad::Tensor& t) {
  Array out({t.rows(), t.cols()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

py::dict parameter_dict(const ParameterList& params) {
  py::dict d;
  for (const auto& p : params) d[py::str(p.name)] = to_array(p.tensor);
  return d;
}

void assign(const ParameterList& params, const std::string& name, const Array& value) {
  for (const auto& p : params) {
    if (p.name != name) continue;
    ad::Tensor t = p.tensor;
    const ad::Tensor v = to_tensor(value);
    if (v.shape() != t.shape()) throw DimensionError(name + ": shape mismatch");
    std::copy(v.values().begin(), v.values().end(), t.mutable_values().begin());
    return;
  }
  throw py::key_error(name);
}

}  // namespace

PYBIND11_MODULE(_ptsl, m) {
  m.doc() = "Projected task-specific layers: backbone, encoder, toy environments and experiment harness";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<TaskError>(m, "TaskError", PyExc_IndexError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

  py::enum_<ProjectionMode>(m, "ProjectionMode")
      .value("SHARED", ProjectionMode::Shared)
      .value("INDEPENDENT", ProjectionMode::Independent);
  py::enum_<ResidualMode>(m, "ResidualMode")
      .value("NONE", ResidualMode::None)
      .value("ADDITION", ResidualMode::Addition)
      .value("LEARNABLE_SUM", ResidualMode::LearnableSum)
      .value("LEARNABLE_PROJECTION", ResidualMode::LearnableProjection);
  py::enum_<EncoderKind>(m, "EncoderKind")
      .value("IDENTITY", EncoderKind::Identity)
      .value("MLP", EncoderKind::Mlp)
      .value("CARE", EncoderKind::CareMixture);

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_readwrite("input_dim", &NetworkConfig::input_dim)
      .def_readwrite("output_dim", &NetworkConfig::output_dim)
      .def_readwrite("hidden_dim", &NetworkConfig::hidden_dim)
      .def_readwrite("task_dim", &NetworkConfig::task_dim)
      .def_readwrite("num_tasks", &NetworkConfig::num_tasks)
      .def_readwrite("num_hidden", &NetworkConfig::num_hidden)
      .def_readwrite("projection_mode", &NetworkConfig::projection_mode)
      .def_readwrite("residual_mode", &NetworkConfig::residual_mode)
      .def_readwrite("first_layer_down_projection", &NetworkConfig::first_layer_down_projection)
      .def_readwrite("last_layer_up_projection", &NetworkConfig::last_layer_up_projection)
      .def("validate", &NetworkConfig::validate);

  py::class_<ParameterBreakdown>(m, "ParameterBreakdown")
      .def_readonly("shared", &ParameterBreakdown::shared)
      .def_readonly("task", &ParameterBreakdown::task)
      .def_readonly("projections", &ParameterBreakdown::projections)
      .def_readonly("residual", &ParameterBreakdown::residual)
      .def_readonly("first_task_layer", &ParameterBreakdown::first_task_layer)
      .def_readonly("last_task_layer", &ParameterBreakdown::last_task_layer)
      .def("total", &ParameterBreakdown::total);
  m.def("count_parameters", &count_parameters, py::arg("config"));
  m.def(
      "budget_match",
      [](std::size_t target, const NetworkConfig& base, std::size_t max_hidden, std::size_t max_task_dim) {
        BudgetSearch s;
        s.base = base;
        s.max_hidden = max_hidden;
        s.max_task_dim = max_task_dim;
        return budget_match(target, s);
      },
      py::arg("target"), py::arg("base"), py::arg("max_hidden") = 512, py::arg("max_task_dim") = 128);

  py::class_<PtslBackbone>(m, "PtslBackbone")
      .def(py::init<const NetworkConfig&, std::uint64_t>(), py::arg("config"), py::arg("seed") = 0)
      .def("forward",
           [](const PtslBackbone& net, const Array& x, const std::vector<int>& task_ids) {
             ad::Tape tape(false);
             return to_array(net.forward(tape, to_tensor(x), task_ids));
           })
      .def("forward_shared",
           [](const PtslBackbone& net, const Array& x) {
             ad::Tape tape(false);
             return to_array(net.forward_shared(tape, to_tensor(x)));
           })
      .def("parameters", [](const PtslBackbone& net) { return parameter_dict(net.parameters()); })
      .def("set_parameter",
           [](PtslBackbone& net, const std::string& name, const Array& v) { assign(net.parameters(), name, v); })
      .def_property_readonly("config", &PtslBackbone::config);

  py::class_<EncoderConfig>(m, "EncoderConfig")
      .def(py::init<>())
      .def_readwrite("kind", &EncoderConfig::kind)
      .def_readwrite("num_experts", &EncoderConfig::num_experts)
      .def_readwrite("expert_hidden", &EncoderConfig::expert_hidden)
      .def_readwrite("context_dim", &EncoderConfig::context_dim)
      .def_readwrite("attention_hidden", &EncoderConfig::attention_hidden)
      .def_readwrite("output_dim", &EncoderConfig::output_dim);

  py::class_<TaskEncoder>(m, "TaskEncoder")
      .def(py::init([](const EncoderConfig& c, std::size_t input_dim, std::size_t num_tasks, std::uint64_t seed) {
             return TaskEncoder(c, input_dim, num_tasks, seed);
           }),
           py::arg("config"), py::arg("input_dim"), py::arg("num_tasks"), py::arg("seed") = 0)
      .def("encode",
           [](const TaskEncoder& enc, const Array& x, const std::vector<int>& task_ids) {
             ad::Tape tape(false);
             return to_array(enc.encode(tape, to_tensor(x), task_ids));
           })
      .def("attention_weights",
           [](const TaskEncoder& enc) {
             ad::Tape tape(false);
             return to_array(enc.attention_weights(tape));
           })
      .def("parameters", [](const TaskEncoder& enc) { return parameter_dict(enc.parameters("")); });

  py::class_<Env>(m, "Env")
      .def(py::init([](const std::string& id) { return Env(make_env_spec(id)); }), py::arg("env_id"))
      .def("reset", &Env::reset, py::arg("seed"))
      .def("step",
           [](Env& env, const std::vector<double>& action) {
             const StepResult r = env.step(action);
             return py::make_tuple(r.observation, r.reward, r.done, r.success);
           })
      .def("observation", &Env::observation)
      .def_property_readonly("success", &Env::success)
      .def_property_readonly("horizon", [](const Env& e) { return e.spec().horizon; });
  m.def("registered_envs", &registered_envs);
  m.def("suite_members", &EnvSuite::suite_members, py::arg("suite_id"));

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_static("parse", &ExperimentConfig::parse, py::arg("text"))
      .def("to_text", &ExperimentConfig::to_text)
      .def("hash", &ExperimentConfig::hash)
      .def("validate", &ExperimentConfig::validate)
      .def_property(
          "preset", [](const ExperimentConfig& c) { return to_string(c.preset); },
          [](ExperimentConfig& c, const std::string& v) { c.preset = parse_preset(v); })
      .def_readwrite("suite", &ExperimentConfig::suite)
      .def_readwrite("seeds", &ExperimentConfig::seeds)
      .def_readwrite("steps_per_task", &ExperimentConfig::steps_per_task)
      .def_readwrite("eval_interval", &ExperimentConfig::eval_interval)
      .def_readwrite("eval_episodes", &ExperimentConfig::eval_episodes)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_readwrite("network", &ExperimentConfig::network)
      .def_readwrite("encoder", &ExperimentConfig::encoder);

  m.def(
      "method_counts",
      [](const ExperimentConfig& c) {
        py::list out;
        for (const auto& meth : build_methods(c, TaskShape::of_suite(c.suite))) {
          out.append(py::dict(py::arg("name") = meth.name, py::arg("role") = to_string(meth.role),
                              py::arg("hidden_dim") = meth.agent.actor.backbone.hidden_dim,
                              py::arg("task_dim") = meth.agent.actor.backbone.task_dim,
                              py::arg("actor") = meth.agent.actor.count(), py::arg("agent") = meth.parameter_count));
        }
        return out;
      },
      py::arg("config"));
  m.def(
      "run",
      [](const ExperimentConfig& c) {
        RunRecord rec;
        {
          py::gil_scoped_release release;
          rec = run(c);
        }
        return report(rec).table();
      },
      py::arg("config"), "Train the preset and return the summary table");
  m.def(
      "report",
      [](const std::string& run_dir, double threshold) {
        return report(RunRecord::load(std::filesystem::path(run_dir) / "run.json"), threshold).table();
      },
      py::arg("run_dir"), py::arg("threshold") = 0.5);

  m.def("gradient_suite", [](std::uint64_t seed) {
    py::list out;
    for (const auto& r : oracle::gradient_suite(seed)) out.append(py::make_tuple(r.name, r.value, r.pass));
    return out;
  }, py::arg("seed") = 7);
}
