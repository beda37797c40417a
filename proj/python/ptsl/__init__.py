# Copyright 2026 The PTSL Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Python bindings for the PTSL multi-task SAC library."""

from ._ptsl import (
    ConfigError,
    ContractError,
    DimensionError,
    EncoderConfig,
    EncoderKind,
    Env,
    ExperimentConfig,
    NetworkConfig,
    NumericalError,
    ParameterBreakdown,
    ProjectionMode,
    PtslBackbone,
    ResidualMode,
    TaskEncoder,
    TaskError,
    budget_match,
    count_parameters,
    gradient_suite,
    method_counts,
    registered_envs,
    report,
    run,
    suite_members,
)

__all__ = [name for name in dir() if not name.startswith("_")]
