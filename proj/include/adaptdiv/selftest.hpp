// Copyright 2026 The adaptdiv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaptdiv/diversity.hpp"

namespace adaptdiv {

// The core under test: its fault state and its current opcode encoding.
struct CoreContext {
  FaultPlan plan;
  std::optional<Seed> encoding_seed;
};

struct FaultReport {
  std::vector<FaultDefinition> found;
  std::vector<std::string> tests_run;
  std::vector<std::string> probe_crashed;  // probes that could not complete
  bool operator==(const FaultReport&) const = default;
};

inline constexpr const char* kRegisterWalk = "register-walk";
inline constexpr const char* kMarch = "march";
inline constexpr const char* kOpcodeSweep = "opcode-sweep";

struct MarchRegion {
  Address lo = 0;
  Address hi = 0x7F00;  // exclusive; at most 0x7F00
};

inline constexpr Address kProbeCodeBase = 0xF000;
inline constexpr Address kMarchCodeBase = 0xFF00;

FaultReport register_walk_test(const CoreContext& core);
// Address-line signature probe plus MATS+ over the region.
FaultReport march_memory_test(const CoreContext& core, MarchRegion region = {},
                              const std::vector<RegIndex>& avoid = {});
FaultReport opcode_sweep_test(const CoreContext& core,
                              const std::vector<RegIndex>& avoid = {});
// Registers first; memory and opcode probes then avoid faulty registers.
FaultReport run_self_tests(const CoreContext& core);

// Probe programs, exposed for inspection.
Program register_walk_probe();
Program line_signature_probe();
Program march_probe(MarchRegion region);
std::vector<Program> opcode_probes();

// Probes run after the task that observed the error: expired transients are
// dropped and permanent faults are active from the first probe cycle.
FaultPlan probe_plan(const FaultPlan& plan);

}  // namespace adaptdiv
