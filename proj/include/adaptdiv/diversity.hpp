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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptdiv/machine.hpp"

namespace adaptdiv {

// Knobs that can change while the system runs.
struct DynamicParams {
  std::uint32_t gap_size = 0;     // words placed before each variable
  std::uint32_t base_offset = 0;  // added to the default data base
  std::optional<Seed> variable_order_seed;  // empty: declaration order
  std::optional<Word> reexpr_key;
  std::optional<std::string> reexpr_family;  // empty: program's family
  auto operator<=>(const DynamicParams&) const = default;
};

// Knobs fixed when a variant is built.
struct StaticParams {
  std::vector<RegIndex> excluded_registers;  // sorted, at most 4
  std::uint32_t nop_count = 0;               // NOPs at each basic-block head
  std::optional<Seed> opcode_encoding_seed;  // empty: identity encoding
  auto operator<=>(const StaticParams&) const = default;
};

struct DiversityConfig {
  DynamicParams dynamic;
  StaticParams static_;
  auto operator<=>(const DiversityConfig&) const = default;
};

inline constexpr std::size_t kMaxExcludedRegisters = 4;
inline constexpr std::uint32_t kMaxBaseOffset = 0x4000;

// Throws ConfigError on structural violations.
void validate(const DiversityConfig& config);
std::string describe(const DiversityConfig& config);

MemoryLayout derive_layout(const Program& program, const DynamicParams& dynamic,
                           std::size_t memory_size = kDefaultMemorySize);

struct StaticTransform {
  std::vector<Instruction> code;  // NOPs inserted, registers remapped
  RegisterMap register_map;
  OpcodeEncoding encoding;
};

StaticTransform apply_static(const Program& program, const StaticParams& params);
RegisterMap allocate_registers(const Program& program,
                               std::span<const RegIndex> excluded);
OpcodeEncoding encoding_from_seed(std::optional<Seed> seed);

// Data re-expression families: in' = f(in, k), out = f^-1(out', k).
struct ReexpressionFamily {
  std::string name;
  std::function<std::vector<Word>(std::span<const Word>, Word)> forward;
  std::function<std::vector<Word>(std::span<const Word>, Word, std::size_t)>
      inverse;
};

const ReexpressionFamily& find_family(std::string_view name);
std::vector<std::string> family_names();

std::vector<Word> reexpress(std::span<const Word> input, Word key,
                            std::string_view family);
std::vector<Word> invert_reexpress(std::span<const Word> output, Word key,
                                   std::string_view family,
                                   std::size_t input_count);

// Family in effect for (program, config), if the transform applies.
std::optional<std::string> effective_family(const Program& program,
                                            const DiversityConfig& config);

// Full replica pipeline on the inputs/outputs: re-express, run, invert.
// Returns nullopt for crashed or timed-out runs.
std::optional<std::vector<Word>> run_canonical(
    const MachineImage& image, const DiversityConfig& config,
    std::span<const Word> input, const FaultPlan& plan = {},
    Cycle cycle_limit = kDefaultCycleLimit,
    ExecutionOutcome* raw = nullptr);

// Seeded random config used by the transparency checks and search tails.
DiversityConfig random_config(Seed seed, const Program& program,
                              bool include_static = true);

}  // namespace adaptdiv
