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

#include <cstdint>
#include <string>
#include <vector>

namespace ptsl::oracle {

struct CheckResult {
  std::string name;
  double value = 0.0;      // measured error or statistic
  double tolerance = 0.0;  // pass when value < tolerance unless noted in detail
  bool pass = false;
  std::string detail;
};

/// Finite-difference checks (step 1e-5, relative error < 1e-4) over every
/// backbone residual and projection mode, the mixture encoder, the actor
/// log-prob path, the actor loss on a frozen critic, and the critic loss.
std::vector<CheckResult> gradient_suite(std::uint64_t seed = 7);

/// Cheap derived-value oracles: straight-line forwards, formula values,
/// budget search, density estimate, blends, environment sweeps.
std::vector<CheckResult> derived_suite(std::uint64_t seed = 11);

std::string format_check(const CheckResult& r);

}  // namespace ptsl::oracle
